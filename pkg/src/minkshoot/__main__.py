"""Enable python -m minkshoot."""

from minkshoot.cli import main

if __name__ == "__main__":
    main()
