"""
Configuração WSGI do topoexplore_web (expõe `application`).
"""

import os

from django.core.wsgi import get_wsgi_application

os.environ.setdefault('DJANGO_SETTINGS_MODULE', 'topoexplore_web.settings')

application = get_wsgi_application()
