from pathlib import Path

from django.contrib import admin, messages

from topoexplore_core.config_loader import ConfigError

from .models import Scenario


@admin.register(Scenario)
class ScenarioAdmin(admin.ModelAdmin):
    list_display = (
        'name',
        'map_name',
        'strategy',
        'seed',
        'coverage_threshold',
        'start_x',
        'start_y',
        'updated_at',
    )
    list_filter = ('strategy',)
    search_fields = ('name', 'map_path', 'source_file')
    readonly_fields = ('source_file', 'created_at', 'updated_at')
    actions = ['check_map']

    @admin.display(description="Mapa")
    def map_name(self, obj):
        return Path(obj.map_path).stem

    @admin.action(description="Verificar mapa e partida")
    def check_map(self, request, queryset):
        """Carrega o mapa de cada cenário e confirma que a partida está livre."""
        for obj in queryset:
            try:
                scenario = obj.to_core()
                world = scenario.load_world()
            except ConfigError as e:
                messages.error(request, f"[{obj.name}] {e}")
                continue
            if world.is_blocked(world.grid.world_to_cell(scenario.start)):
                messages.error(request, f"[{obj.name}] Partida numa célula ocupada ou fora do mapa.")
            else:
                messages.success(
                    request,
                    f"[{obj.name}] Mapa OK ({world.grid.width}x{world.grid.height} células).",
                )
