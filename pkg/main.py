import logging
import sys
from typing import List, Optional

import click

from cli import EXIT_FAIL, EXIT_USAGE, cli
from logging_config import setup_logging
from report_store import close_report_store

logger = logging.getLogger("main")


def run(argv: Optional[List[str]] = None) -> int:
    """Run one CLI invocation and return its exit code"""
    argv = list(sys.argv[1:] if argv is None else argv)
    setup_logging()
    logger.info(f"twinwall {' '.join(argv)}")
    try:
        result = cli.main(args=argv, prog_name="twinwall", obj={"argv": argv}, standalone_mode=False)
        code = result if isinstance(result, int) else 0
    except click.ClickException as e:
        e.show()
        code = e.exit_code
    except click.Abort:
        click.echo("Aborted", err=True)
        code = EXIT_USAGE
    except Exception as e:
        logger.critical(f"Unhandled error: {str(e)}", exc_info=True)
        code = EXIT_FAIL
    finally:
        close_report_store()
    logger.info(f"Exit code {code}")
    return code


if __name__ == "__main__":
    sys.exit(run())
