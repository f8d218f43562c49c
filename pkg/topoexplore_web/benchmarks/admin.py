from django.contrib import admin
from .models import SuiteRun, TrialRecord


class TrialRecordInline(admin.TabularInline):
    model = TrialRecord
    extra = 0
    can_delete = False
    fields = ('scenario_name', 'map_name', 'strategy', 'seed', 'success', 'reason', 'time_s', 'distance_m', 'final_coverage')
    readonly_fields = fields


@admin.register(SuiteRun)
class SuiteRunAdmin(admin.ModelAdmin):
    list_display = (
        'config_file',
        'kind',
        'status',
        'trials_total',
        'trials_succeeded',
        'started_at',
        'finished_at',
    )
    list_filter = ('status', 'kind')
    search_fields = ('config_file', 'out_dir', 'error_message')
    inlines = [TrialRecordInline]


@admin.register(TrialRecord)
class TrialRecordAdmin(admin.ModelAdmin):
    list_display = (
        'scenario_name',
        'map_name',
        'strategy',
        'seed',
        'success',
        'reason',
        'time_s',
        'distance_m',
        'final_coverage',
        'suite_run',
    )
    list_filter = ('success', 'strategy', 'map_name', 'reason')
    search_fields = ('scenario_name', 'map_name', 'strategy', 'trajectory_file')
