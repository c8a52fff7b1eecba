"""Run the service: ``embed-service [--host H] [--port P] [--model-text ID] ...``"""

from __future__ import annotations

import argparse

import uvicorn

from .app import create_app
from .config import MODALITIES, REFERENCE_MODEL, ServiceConfig


def main() -> None:
    parser = argparse.ArgumentParser(description="embedding inference service")
    parser.add_argument("--host", default="127.0.0.1")
    parser.add_argument("--port", type=int, default=8750)
    for modality in MODALITIES:
        parser.add_argument(f"--model-{modality}", default=REFERENCE_MODEL,
                            help=f"checkpoint for the {modality} encoder "
                                 f"(default: built-in reference encoder)")
    args = parser.parse_args()
    config = ServiceConfig(
        host=args.host, port=args.port,
        models={m: getattr(args, f"model_{m}") for m in MODALITIES},
    )
    uvicorn.run(create_app(config), host=config.host, port=config.port)


if __name__ == "__main__":
    main()
