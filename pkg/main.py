import sys

from dotenv import load_dotenv

load_dotenv()

from src.cli import dispatch  # noqa: E402

if __name__ == "__main__":
    # Run the command line
    sys.exit(dispatch())
