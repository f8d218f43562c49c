# Generated by Django 5.1.2 on 2026-10-18 21:07

from django.db import migrations, models


def copy_map_name(apps, schema_editor):
    TrialRecord = apps.get_model('benchmarks', 'TrialRecord')
    TrialRecord.objects.update(scenario_name=models.F('map_name'))


class Migration(migrations.Migration):

    dependencies = [
        ('benchmarks', '0001_initial'),
    ]

    operations = [
        migrations.AddField(
            model_name='trialrecord',
            name='scenario_name',
            field=models.CharField(default='', max_length=100),
            preserve_default=False,
        ),
        migrations.RunPython(copy_map_name, migrations.RunPython.noop),
        migrations.AlterUniqueTogether(
            name='trialrecord',
            unique_together={('suite_run', 'scenario_name', 'strategy', 'seed')},
        ),
        migrations.AlterModelOptions(
            name='trialrecord',
            options={'ordering': ['scenario_name', 'strategy', 'seed'], 'verbose_name': 'Ensaio', 'verbose_name_plural': 'Ensaios'},
        ),
    ]
