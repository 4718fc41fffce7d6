"""CLI 실행 엔트리포인트."""
import sys

from erm_ica.main import main

if __name__ == "__main__":
    sys.exit(main())
