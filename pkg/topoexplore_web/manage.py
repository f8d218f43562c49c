#!/usr/bin/env python
"""Utilitário de linha de comandos do Django para o TopoExplore."""
import os
import sys
from pathlib import Path


def main():
    # BASE_DIR = pasta do manage.py (topoexplore_web)
    base_dir = Path(__file__).resolve().parent
    # ROOT_DIR = pasta acima, onde vive o topoexplore_core
    root_dir_str = str(base_dir.parent)
    if root_dir_str not in sys.path:
        sys.path.insert(0, root_dir_str)

    os.environ.setdefault('DJANGO_SETTINGS_MODULE', 'topoexplore_web.settings')
    try:
        from django.core.management import execute_from_command_line
    except ImportError as exc:
        raise ImportError(
            "Não foi possível importar o Django. Está instalado e "
            "disponível no PYTHONPATH? O ambiente virtual está activo?"
        ) from exc
    execute_from_command_line(sys.argv)


if __name__ == '__main__':
    main()
