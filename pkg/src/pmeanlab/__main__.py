"""``python -m pmeanlab``.

``PMEANLAB_THREADS`` caps the BLAS/OpenMP thread pools; it must be set before
numpy is imported, hence the import inside :func:`main`.
"""

import os
import sys


def main() -> int:
    threads = os.environ.get("PMEANLAB_THREADS")
    if threads:
        for var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS"):
            os.environ.setdefault(var, threads)
    from .cli import main as cli_main

    return cli_main()


if __name__ == "__main__":
    sys.exit(main())
