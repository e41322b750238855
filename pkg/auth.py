"""API-key guard for the simulator's HTTP service."""
import os
import secrets
from typing import List

from dotenv import load_dotenv
from fastapi import HTTPException, Security, status
from fastapi.security import APIKeyHeader

from errors import ConfigError

load_dotenv()

API_KEY_NAME = "X-API-Key"


def load_api_keys(raw: str) -> List[str]:
    """Split a comma-separated key list; an empty list is a configuration error."""
    keys = [k.strip() for k in raw.split(",") if k.strip()]
    if not keys:
        raise ConfigError("XXZ_API_KEYS: no API keys configured (comma-separated, environment or .env)")
    return keys


API_KEYS: List[str] = load_api_keys(os.getenv("XXZ_API_KEYS", ""))
api_key_header = APIKeyHeader(name=API_KEY_NAME, auto_error=False)


def get_api_key(api_key_header: str = Security(api_key_header)) -> str:
    """Return the caller's key if it matches a configured one (constant-time); 401 otherwise."""
    if api_key_header and any(secrets.compare_digest(api_key_header, key) for key in API_KEYS):
        return api_key_header
    raise HTTPException(status_code=status.HTTP_401_UNAUTHORIZED, detail="Invalid or missing API key")
