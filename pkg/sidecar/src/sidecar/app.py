"""The HTTP surface: POST /tts, /sts, /ppl plus GET /healthz.

Bodies are UTF-8 JSON. Bad or missing fields are a 400, scorer failures
are a 500, and every success reply is schema-checked before it leaves.
Inference is serialized per model by the backends; request handling
itself may be concurrent. No authentication: bind to loopback.
"""

from __future__ import annotations

import argparse
import threading

from fastapi import FastAPI, HTTPException, Request
from fastapi.responses import JSONResponse

from .audio import to_b64
from .lite import LiteBackend
from .schemas import validate_reply


async def _body(request: Request) -> dict:
    try:
        data = await request.json()
    except Exception:
        raise HTTPException(status_code=400, detail="body must be JSON")
    if not isinstance(data, dict):
        raise HTTPException(status_code=400, detail="body must be a JSON object")
    return data


def _text_field(body: dict, name: str) -> str:
    value = body.get(name)
    if not isinstance(value, str) or not value.strip():
        raise HTTPException(status_code=400,
                            detail=f"{name} must be a non-empty string")
    return value


def create_app(backend=None) -> FastAPI:
    backend = backend or LiteBackend()
    app = FastAPI(title="scoring sidecar", docs_url=None, redoc_url=None)
    # one lock per capability: concurrent requests queue at the model
    locks = {name: threading.Lock() for name in ("tts", "sts", "ppl")}

    def reply(endpoint: str, payload: dict) -> JSONResponse:
        try:
            validate_reply(endpoint, payload)
        except Exception as exc:
            raise HTTPException(status_code=500,
                                detail=f"reply contract broken: {exc}")
        return JSONResponse(payload)

    @app.post("/tts")
    async def tts(request: Request):
        body = await _body(request)
        text = _text_field(body, "text")
        try:
            with locks["tts"]:
                wav, rate = backend.tts.synthesize(text)
        except ValueError as exc:
            raise HTTPException(status_code=400, detail=str(exc))
        except Exception as exc:
            raise HTTPException(status_code=500, detail=f"synthesis failed: {exc}")
        return reply("tts", {"audio_wav_b64": to_b64(wav),
                             "sample_rate_hz": rate})

    @app.post("/sts")
    async def sts(request: Request):
        body = await _body(request)
        candidate = _text_field(body, "candidate")
        reference = _text_field(body, "reference")
        try:
            with locks["sts"]:
                f1 = backend.sts.score(candidate, reference)
        except ValueError as exc:
            raise HTTPException(status_code=400, detail=str(exc))
        except Exception as exc:
            raise HTTPException(status_code=500, detail=f"scoring failed: {exc}")
        return reply("sts", {"f1": float(f1)})

    @app.post("/ppl")
    async def ppl(request: Request):
        body = await _body(request)
        text = _text_field(body, "text")
        try:
            with locks["ppl"]:
                value = backend.ppl.score(text)
        except ValueError as exc:
            raise HTTPException(status_code=400, detail=str(exc))
        except Exception as exc:
            raise HTTPException(status_code=500, detail=f"scoring failed: {exc}")
        return reply("ppl", {"ppl": float(value)})

    @app.get("/healthz")
    async def healthz():
        return reply("healthz", {
            "status": "ok",
            "backend": backend.name,
            "models": {
                "tts": backend.tts.model_name,
                "sts": backend.sts.model_name,
                "ppl": backend.ppl.model_name,
            },
        })

    return app


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="sipp-sidecar",
        description="JSON scoring service: /tts, /sts, /ppl, /healthz")
    parser.add_argument("--host", default="127.0.0.1")
    parser.add_argument("--port", type=int, default=8080)
    parser.add_argument("--backend", choices=("lite", "neural"), default="lite")
    parser.add_argument("--cpu", action="store_true",
                        help="force CPU inference for the neural backend")
    args = parser.parse_args(argv)

    if args.backend == "neural":
        from .neural import NeuralBackend
        backend = NeuralBackend(cpu=args.cpu)
    else:
        backend = LiteBackend()

    import uvicorn
    uvicorn.run(create_app(backend), host=args.host, port=args.port)
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
