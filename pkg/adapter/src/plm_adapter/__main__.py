"""Entry point: `python -m plm_adapter [--backbone stub|hf] [...]`."""

from __future__ import annotations

import argparse
import sys

from .server import StubBackbone, serve


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(
        prog="plm-adapter",
        description="Sequence-classifier worker speaking JSON lines on stdio.",
    )
    parser.add_argument(
        "--backbone", choices=("stub", "hf"), default="stub",
        help="stub: hashed bag-of-words logistic head (no downloads); "
        "hf: fine-tune a local transformer checkpoint.",
    )
    parser.add_argument(
        "--checkpoint", default=None,
        help="Local checkpoint path or model name (hf backbone only).",
    )
    parser.add_argument(
        "--deterministic", action="store_true",
        help="Force deterministic kernels where the backbone supports it.",
    )
    args = parser.parse_args(argv)

    if args.backbone == "stub":
        backbone = StubBackbone()
    else:
        from .hf import HfBackbone
        from .protocol import ProtocolError

        try:
            backbone = HfBackbone(args.checkpoint, deterministic=args.deterministic)
        except ProtocolError as exc:
            print(f"error: {exc}", file=sys.stderr)
            return 1
    return serve(backbone)


if __name__ == "__main__":
    sys.exit(main())
