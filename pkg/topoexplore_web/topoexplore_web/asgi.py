"""
Configuração ASGI do topoexplore_web (expõe `application`).
"""

import os

from django.core.asgi import get_asgi_application

os.environ.setdefault('DJANGO_SETTINGS_MODULE', 'topoexplore_web.settings')

application = get_asgi_application()
