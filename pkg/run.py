#!/usr/bin/env python3
"""
QBC4 Simulator - Bootstrap
==========================

Prüft die numerische Umgebung und startet die CLI.

Usage:
    ./run.py run --n 3 --bit 1 --seed 7    # Forward to the CLI
    ./run.py --envinfo                     # Show numerical environment only
"""
import logging
import sys
import time
from pathlib import Path

# Projektpfad hinzufügen
PROJECT_ROOT = Path(__file__).parent
sys.path.insert(0, str(PROJECT_ROOT))

logging.basicConfig(
    level=logging.INFO,
    format='%(asctime)s [%(levelname)s] %(name)s: %(message)s'
)
logger = logging.getLogger("qbc4sim.bootstrap")


class Bootstrap:
    """
    Bootstrap-Klasse für den Simulator.

    Führt sequentiell aus:
    1. Abhängigkeiten prüfen
    2. Einstellungen laden
    3. CLI starten
    """

    REQUIRED = ("numpy", "scipy", "pandas", "pydantic", "dotenv")

    def __init__(self):
        self.start_time = time.time()

    def run(self, argv=None) -> int:
        try:
            self._check_dependencies()
            self._load_settings()
            return self._start_cli(argv)
        except ImportError as e:
            logger.error(f"Bootstrap failed: {e}")
            return 1

    def _check_dependencies(self):
        """Phase 1: Pflichtmodule importieren"""
        import importlib

        missing = []
        for name in self.REQUIRED:
            try:
                importlib.import_module(name)
            except ImportError:
                missing.append(name)
        if missing:
            raise ImportError(f"Kritische Module fehlen: {', '.join(missing)}")
        logger.debug("[Phase 1/3] dependencies ok")

    def _load_settings(self):
        """Phase 2: Toleranzen und Optimizer-Defaults laden"""
        from qbc4sim.core.settings import get_settings

        settings = get_settings()
        logger.debug(f"[Phase 2/3] tolerances {settings.tolerances}, workers {settings.optimizer.workers}")

    def _start_cli(self, argv) -> int:
        """Phase 3: CLI starten"""
        logger.debug(f"[Phase 3/3] bootstrap took {time.time() - self.start_time:.2f}s")
        from qbc4sim.main import main
        return main(argv)


def show_environment_info() -> int:
    """Zeigt Versionen und Einstellungen und beendet"""
    import numpy
    import scipy
    import pandas
    import pydantic

    from qbc4sim.core.settings import get_settings
    from qbc4sim.version import VERSION

    settings = get_settings()
    print(f"qbc4sim   {VERSION}")
    print(f"numpy     {numpy.__version__}")
    print(f"scipy     {scipy.__version__}")
    print(f"pandas    {pandas.__version__}")
    print(f"pydantic  {pydantic.VERSION}")
    print(f"workers   {settings.optimizer.workers}")
    print(f"tolerances structural={settings.tolerances.structural:g} "
          f"equality={settings.tolerances.equality:g} optimizer={settings.tolerances.optimizer:g}")
    return 0


if __name__ == "__main__":
    if '--envinfo' in sys.argv:
        sys.exit(show_environment_info())

    sys.exit(Bootstrap().run(sys.argv[1:]))
