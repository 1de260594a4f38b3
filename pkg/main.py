"""
ruinlab - Main Entry Point

Monte Carlo ruin probabilities, accumulated-utility values and closed-form
HJB quantities for an insurer investing in a Black-Scholes market.

Usage:
    python main.py <merton|ruin|table|value|dpp> --config configs/reference.cfg
"""
import sys
import logging
from pathlib import Path
from datetime import datetime

# Add project root to path
sys.path.insert(0, str(Path(__file__).parent))


def setup_logging(level: int = logging.INFO):
    """Logging to a dated file and to stderr (stdout carries results)"""

    # Create logs directory
    log_dir = Path.home() / '.ruinlab' / 'logs'
    log_dir.mkdir(parents=True, exist_ok=True)

    # Create log file
    log_file = log_dir / f'ruinlab_{datetime.now().strftime("%Y%m%d")}.log'

    # Configure logging
    logging.basicConfig(
        level=level,
        format='%(asctime)s - %(name)s - %(levelname)s - %(message)s',
        handlers=[
            logging.FileHandler(log_file, encoding='utf-8'),
            logging.StreamHandler(sys.stderr)
        ]
    )

    # Reduce noise from external libraries
    logging.getLogger('matplotlib').setLevel(logging.WARNING)

    logger = logging.getLogger(__name__)
    logger.debug(f"Log file: {log_file}")


def check_dependencies() -> bool:
    """Check if required dependencies are installed"""

    missing = []

    for module, package in (('numpy', 'numpy'), ('scipy', 'scipy'), ('dotenv', 'python-dotenv')):
        try:
            __import__(module)
        except ImportError:
            missing.append(package)

    if missing:
        print("\nMissing required dependencies:", file=sys.stderr)
        for pkg in missing:
            print(f"   - {pkg}", file=sys.stderr)
        print("\nInstall dependencies with:\n   pip install -r requirements.txt\n", file=sys.stderr)
        return False

    return True


def main():
    """Application entry point with exception handling"""

    if not check_dependencies():
        sys.exit(1)

    setup_logging()
    logger = logging.getLogger(__name__)

    from src.cli.commands import run

    try:
        sys.exit(run())

    except KeyboardInterrupt:
        logger.info("Run interrupted by user")
        sys.exit(130)

    except Exception as e:
        logger.critical(f"ruinlab failed: {e}", exc_info=True)
        print(f"\nCritical error: {e}", file=sys.stderr)
        print(f"Check logs at: {Path.home() / '.ruinlab' / 'logs'}", file=sys.stderr)
        sys.exit(1)


if __name__ == "__main__":
    main()
