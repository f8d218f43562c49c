# Generated by Django 5.1.2 on 2026-10-18 18:52

import django.db.models.deletion
from django.db import migrations, models


class Migration(migrations.Migration):

    initial = True

    dependencies = [
        ('scenarios', '0001_initial'),
    ]

    operations = [
        migrations.CreateModel(
            name='SuiteRun',
            fields=[
                ('id', models.BigAutoField(auto_created=True, primary_key=True, serialize=False, verbose_name='ID')),
                ('kind', models.CharField(choices=[('suite', 'Suite'), ('ablation', 'Ablação')], default='suite', max_length=20)),
                ('config_file', models.CharField(help_text='Ficheiro YAML da suite.', max_length=500)),
                ('out_dir', models.CharField(blank=True, help_text='Pasta onde ficaram os CSVs, trajectórias e gráficos.', max_length=500)),
                ('started_at', models.DateTimeField(auto_now_add=True)),
                ('finished_at', models.DateTimeField(blank=True, null=True)),
                ('status', models.CharField(choices=[('RUNNING', 'Em execução'), ('SUCCESS', 'Sucesso'), ('ERROR', 'Erro')], default='RUNNING', max_length=20)),
                ('trials_total', models.IntegerField(default=0)),
                ('trials_succeeded', models.IntegerField(default=0)),
                ('error_message', models.TextField(blank=True, help_text='Mensagem de erro, se a execução terminar em erro.')),
            ],
            options={
                'verbose_name': 'Execução de Suite',
                'verbose_name_plural': 'Execuções de Suites',
                'ordering': ['-started_at'],
            },
        ),
        migrations.CreateModel(
            name='TrialRecord',
            fields=[
                ('id', models.BigAutoField(auto_created=True, primary_key=True, serialize=False, verbose_name='ID')),
                ('map_name', models.CharField(max_length=100)),
                ('strategy', models.CharField(max_length=30)),
                ('seed', models.PositiveIntegerField()),
                ('success', models.BooleanField(default=False)),
                ('reason', models.CharField(blank=True, help_text='Motivo do fim: coverage, complete, collision, timeout, detached, error.', max_length=30)),
                ('time_s', models.FloatField(default=0.0)),
                ('distance_m', models.FloatField(default=0.0)),
                ('final_coverage', models.FloatField(default=0.0)),
                ('compute_ms', models.FloatField(default=0.0)),
                ('frontier_ms', models.FloatField(default=0.0)),
                ('target_ms', models.FloatField(default=0.0)),
                ('other_ms', models.FloatField(default=0.0)),
                ('trajectory_file', models.CharField(blank=True, help_text='CSV da trajectória deste ensaio.', max_length=500)),
                ('scenario', models.ForeignKey(blank=True, null=True, on_delete=django.db.models.deletion.SET_NULL, related_name='trials', to='scenarios.scenario')),
                ('suite_run', models.ForeignKey(on_delete=django.db.models.deletion.CASCADE, related_name='trials', to='benchmarks.suiterun')),
            ],
            options={
                'verbose_name': 'Ensaio',
                'verbose_name_plural': 'Ensaios',
                'ordering': ['map_name', 'strategy', 'seed'],
                'unique_together': {('suite_run', 'map_name', 'strategy', 'seed')},
            },
        ),
    ]
