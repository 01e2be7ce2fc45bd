import sys

from torch_witness.cli import main

if __name__ == '__main__':
    sys.exit(main())
