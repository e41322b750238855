"""HTTP front end for the simulator commands.

    XXZ_API_KEYS=secret uvicorn main:app --port 8000

Request bodies are run documents (see run_config.py); every endpoint needs an X-API-Key header.
"""
import json
import os

from dotenv import load_dotenv
from fastapi import Depends, FastAPI, Request
from fastapi.responses import JSONResponse

import logs
from auth import get_api_key
from basis import MAX_SITES
from cli import cmd_protocol, cmd_spectrum, cmd_sweep, protocol_summary, spectrum_table
from errors import ConfigError, DomainError, NumericalError
from run_config import API_VERSION, SCHEMA_VERSION, RunConfig, format_version

# Load environment variables from .env file
load_dotenv()

API_PORT = int(os.getenv("XXZ_API_PORT", 8000))

print(f"[startup] XXZ simulator API version {API_VERSION} ({format_version(API_VERSION)}), "
      f"sector cap L <= {MAX_SITES}", flush=True)

app = FastAPI(title="XXZ defect simulator", version=API_VERSION)


@app.exception_handler(ConfigError)
@app.exception_handler(DomainError)
async def _invalid_request(request: Request, exc: ValueError):
    return JSONResponse(status_code=422, content={"detail": str(exc)})


@app.exception_handler(NumericalError)
async def _numerical_failure(request: Request, exc: NumericalError):
    return JSONResponse(status_code=500, content={"detail": str(exc), "last_step": exc.last_step})


def _records(frame):
    # round-trip through pandas JSON so numpy scalars and NaN come out as plain JSON
    return json.loads(frame.to_json(orient="records"))


@app.get("/")
def f_hello(api_key: str = Depends(get_api_key)):
    """Health check: running version, accepted document schema and sector cap."""
    result = {"message": "XXZ simulator ready", "api_version": API_VERSION,
              "schema_version": SCHEMA_VERSION, "max_sites": MAX_SITES}
    logs.log_usage("hello", result, API_VERSION)
    return result


@app.post("/spectrum")
def f_spectrum(config: RunConfig, api_key: str = Depends(get_api_key)):
    """Eigenvalues of the configured sector, ascending, with the band assignment table."""
    report = cmd_spectrum(config)
    result = {
        "eigenvalues": [float(e) for e in report.eigenvalues],
        "bands": _records(spectrum_table(report)),
        "band_tolerance": report.tolerance,
        "unassigned": report.assignment.unassigned if report.assignment else [],
        "ambiguous": report.assignment.ambiguous if report.assignment else [],
        "api_version": API_VERSION,
    }
    logs.log_usage("spectrum", {"config": config.model_dump(mode="json"), "bands": result["bands"]}, API_VERSION)
    return result


@app.post("/protocol")
def f_protocol(config: RunConfig, api_key: str = Depends(get_api_key)):
    """Run the configured protocol; returns the summary and the time series as records."""
    run = cmd_protocol(config)
    summary = json.loads(json.dumps(protocol_summary(run, config), default=logs.json_default))
    logs.log_usage("protocol", summary, API_VERSION)
    return {"summary": summary, "timeseries": _records(run.series.to_frame()), "api_version": API_VERSION}


@app.post("/sweep")
def f_sweep(config: RunConfig, api_key: str = Depends(get_api_key)):
    """Run the configured sweep; one summary row per parameter value, in input order."""
    rows = _records(cmd_sweep(config))
    logs.log_usage("sweep", {"config": config.model_dump(mode="json"), "rows": rows}, API_VERSION)
    return {"rows": rows, "api_version": API_VERSION}


if __name__ == "__main__":
    import uvicorn

    logs.log_usage("start", {"message": f"XXZ simulator API start version {API_VERSION} on port {API_PORT}"}, API_VERSION)
    print(f"Starting API version {API_VERSION} on port {API_PORT}")
    uvicorn.run(app, host="0.0.0.0", port=API_PORT)
