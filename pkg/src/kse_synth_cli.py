"""Console entry point that pins BLAS thread counts before numpy loads.

The solver and simulator are single-job processes whose BLAS pools are sized
by environment variables read when the linear-algebra runtime first loads.
Importing the package pulls in numpy, so the ``--threads`` flag (or the
``KSE_SYNTH_THREADS`` fallback) must be applied before that import happens;
this stub is the only module the console script loads eagerly.  Explicitly
set BLAS variables always win over both.
"""

import os
import sys

_BLAS_VARS = (
    "OMP_NUM_THREADS",
    "OPENBLAS_NUM_THREADS",
    "MKL_NUM_THREADS",
    "NUMEXPR_NUM_THREADS",
    "VECLIB_MAXIMUM_THREADS",
)


def _thread_request(argv):
    for i, arg in enumerate(argv):
        if arg == "--threads" and i + 1 < len(argv):
            return argv[i + 1]
        if arg.startswith("--threads="):
            return arg.split("=", 1)[1]
    return os.environ.get("KSE_SYNTH_THREADS")


def pin_threads(argv) -> None:
    request = _thread_request(argv)
    if request is not None and request.isdigit() and int(request) > 0:
        for var in _BLAS_VARS:
            os.environ.setdefault(var, request)


def main(argv=None) -> int:
    argv = sys.argv[1:] if argv is None else list(argv)
    pin_threads(argv)
    from kse_synth.cli import main as run_cli

    return run_cli(argv)


if __name__ == "__main__":
    sys.exit(main())
