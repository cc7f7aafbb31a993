import sys
from dotenv import load_dotenv


def main():
    # NESTEX_LOG_LEVEL / NESTEX_WORKERS may come from .env
    load_dotenv()
    try:
        from nestex.ui.cli import dispatch
    except ImportError as e:
        print(f"Import error: {e}")
        print("Make sure all dependencies are installed: pip install -r requirements.txt")
        return 1
    try:
        return dispatch(sys.argv[1:])
    except KeyboardInterrupt:
        print("\nInterrupted.")
        return 130


if __name__ == "__main__":
    sys.exit(main())
