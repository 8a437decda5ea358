"""render: draw one figure from a disordyn artifact bundle.

Exit codes: 0 success, 2 bad arguments or missing artifact.
"""

from __future__ import annotations

import argparse
import sys

from .bundle_reader import MissingArtifactError
from .figures import KINDS, FigureRequest, render


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="render", description="Render a figure from a disordyn bundle."
    )
    parser.add_argument("--bundle", required=True, help="bundle directory")
    parser.add_argument("--kind", required=True, choices=KINDS)
    parser.add_argument("--time", type=float, default=None,
                        help="output time to display (nearest available is used)")
    parser.add_argument("--out", required=True, help="output image path")
    args = parser.parse_args(argv)
    try:
        summary = render(FigureRequest(bundle=args.bundle, kind=args.kind,
                                       time=args.time, out=args.out))
    except (MissingArtifactError, ValueError) as exc:
        print(f"render error: {exc}", file=sys.stderr)
        return 2
    time_note = f" (t={summary['time']:g})" if summary["time"] is not None else ""
    print(f"wrote {summary['path']}{time_note}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
