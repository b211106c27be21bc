"""
Main entry point for the overlapping-mixture toolkit
"""
from dotenv import load_dotenv

load_dotenv()

from backend.cli import main  # noqa: E402


if __name__ == "__main__":
    raise SystemExit(main())
