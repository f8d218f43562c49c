"""
URLs do topoexplore_web. Por agora só o admin (cenários e histórico de ensaios).
"""
from django.contrib import admin
from django.urls import path

admin.site.site_header = "TopoExplore"
admin.site.site_title = "TopoExplore"

urlpatterns = [
    path('admin/', admin.site.urls),
]
