"""Reply schemas for every endpoint; each handler validates its payload
against these before sending, so a contract break is a 500, never a
malformed 200."""

import jsonschema

REPLY_SCHEMAS = {
    "tts": {
        "type": "object",
        "properties": {
            "audio_wav_b64": {"type": "string", "minLength": 1},
            "sample_rate_hz": {"type": "integer", "exclusiveMinimum": 0},
        },
        "required": ["audio_wav_b64", "sample_rate_hz"],
        "additionalProperties": False,
    },
    "sts": {
        "type": "object",
        "properties": {
            "f1": {"type": "number", "minimum": 0.0, "maximum": 1.0},
        },
        "required": ["f1"],
        "additionalProperties": False,
    },
    "ppl": {
        "type": "object",
        "properties": {
            "ppl": {"type": "number", "exclusiveMinimum": 0.0},
        },
        "required": ["ppl"],
        "additionalProperties": False,
    },
    "healthz": {
        "type": "object",
        "properties": {
            "status": {"type": "string", "enum": ["ok"]},
            "backend": {"type": "string"},
            "models": {
                "type": "object",
                "properties": {
                    "tts": {"type": "string"},
                    "sts": {"type": "string"},
                    "ppl": {"type": "string"},
                },
                "required": ["tts", "sts", "ppl"],
            },
        },
        "required": ["status", "backend", "models"],
        "additionalProperties": False,
    },
}


def validate_reply(endpoint: str, payload: dict) -> dict:
    jsonschema.validate(payload, REPLY_SCHEMAS[endpoint])
    return payload
