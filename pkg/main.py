import sys

from dotenv import load_dotenv

# Load environment variables before the config modules read them
load_dotenv()

from cli.commands import dispatch


def main() -> int:
    return dispatch(sys.argv[1:])


if __name__ == "__main__":
    sys.exit(main())
