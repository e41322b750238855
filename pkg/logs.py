import os
import json
import hashlib
from datetime import date, datetime

import numpy as np
from dotenv import load_dotenv

load_dotenv()

LOGS_FOLDER = os.getenv("XXZ_LOGS_FOLDER", "logs")
LOGS_ENABLED = os.getenv("XXZ_LOGS_ENABLED", "1") != "0"


def f_getlogfilename(endpoint, contenttext, version):
    """Generate a unique log filename based on endpoint, timestamp, and content hash.

    Creates a filename in the format: YYYYMMDD-HHMMSS_endpoint_version_hash.json
    Ensures the logs folder exists before generating the filename.

    Args:
        endpoint (str): The command or endpoint name (e.g., 'spectrum', 'protocol')
        contenttext (str): The content to be logged (used for MD5 hash)
        version (str): The current simulator version string

    Returns:
        str: Complete path to the log file
    """
    os.makedirs(LOGS_FOLDER, exist_ok=True)
    date_time_str = datetime.now().strftime("%Y%m%d-%H%M%S")
    md5_hash = hashlib.md5(contenttext.encode('utf-8')).hexdigest()
    return os.path.join(LOGS_FOLDER, f"{date_time_str}_{endpoint}_{version}_{md5_hash}.json")


def json_default(obj):
    """JSON serializer for objects not serializable by default json code"""
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.floating):
        return float(obj)
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, complex):
        return [obj.real, obj.imag]
    if isinstance(obj, (date, datetime)):
        return obj.isoformat()
    raise TypeError(f"Object of type {obj.__class__.__name__} is not JSON serializable")


def log_usage(endpoint, content, version):
    """Log a run to a JSON file.

    Returns the path written, or None when logging is disabled or the file already exists
    (log files are never overwritten).
    """
    if not LOGS_ENABLED:
        return None
    contenttext = json.dumps(content, indent=4, ensure_ascii=False, default=json_default)
    log_filename = f_getlogfilename(endpoint, contenttext, version)
    if os.path.exists(log_filename):
        return None
    with open(log_filename, 'w', encoding='utf-8') as file:
        file.write(contenttext)
    return log_filename
