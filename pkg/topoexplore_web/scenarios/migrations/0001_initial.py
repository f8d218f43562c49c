# Generated by Django 5.1.2 on 2026-10-18 18:40

import django.core.validators
from django.db import migrations, models


class Migration(migrations.Migration):

    initial = True

    dependencies = [
    ]

    operations = [
        migrations.CreateModel(
            name='Scenario',
            fields=[
                ('id', models.BigAutoField(auto_created=True, primary_key=True, serialize=False, verbose_name='ID')),
                ('name', models.CharField(help_text='Nome do cenário (ex.: scene1, blocked_door).', max_length=100, unique=True)),
                ('map_path', models.CharField(help_text='Caminho absoluto do ficheiro de mapa (.map).', max_length=500)),
                ('start_x', models.FloatField(help_text='Partida, x em metros.')),
                ('start_y', models.FloatField(help_text='Partida, y em metros.')),
                ('start_theta', models.FloatField(blank=True, help_text='Rumo inicial em radianos. Vazio: tirado da seed.', null=True)),
                ('coverage_threshold', models.FloatField(default=1.0, help_text='Fracção de cobertura que termina o episódio com sucesso.', validators=[django.core.validators.MinValueValidator(0.0), django.core.validators.MaxValueValidator(1.0)])),
                ('strategy', models.CharField(choices=[('dualgraph', 'dualgraph'), ('nearest', 'nearest'), ('greedy-info', 'greedy-info'), ('A', 'A'), ('A+B', 'A+B'), ('A+C', 'A+C'), ('A+B+C', 'A+B+C')], default='dualgraph', max_length=30)),
                ('seed', models.PositiveIntegerField(default=0)),
                ('params', models.JSONField(blank=True, default=dict, help_text='Parâmetros do explorador diferentes dos valores por omissão (ex.: {"d_region": 4.0}).')),
                ('source_file', models.CharField(blank=True, help_text='Ficheiro .cfg de onde o cenário foi importado.', max_length=500)),
                ('created_at', models.DateTimeField(auto_now_add=True)),
                ('updated_at', models.DateTimeField(auto_now=True)),
            ],
            options={
                'verbose_name': 'Cenário',
                'verbose_name_plural': 'Cenários',
                'ordering': ['name'],
            },
        ),
    ]
