from django.db import migrations, models
import django.db.models.deletion


class Migration(migrations.Migration):

    initial = True

    dependencies = [
    ]

    operations = [
        migrations.CreateModel(
            name='ProblemInstance',
            fields=[
                ('id', models.BigAutoField(auto_created=True, primary_key=True, serialize=False, verbose_name='ID')),
                ('name', models.CharField(max_length=80, unique=True)),
                ('problem', models.CharField(max_length=20)),
                ('topology', models.CharField(max_length=40)),
                ('topology_label', models.CharField(max_length=40)),
                ('n', models.IntegerField()),
                ('edges', models.JSONField(default=list)),
                ('qubo', models.JSONField(default=list)),
                ('penalty', models.FloatField(default=0)),
                ('offset', models.FloatField(default=0)),
                ('h_min', models.FloatField()),
                ('h_max', models.FloatField()),
                ('argmin', models.CharField(max_length=32)),
            ],
            options={
                'ordering': ['n', 'problem', 'topology'],
            },
        ),
        migrations.CreateModel(
            name='RunRecord',
            fields=[
                ('id', models.BigAutoField(auto_created=True, primary_key=True, serialize=False, verbose_name='ID')),
                ('method', models.CharField(max_length=20)),
                ('seed', models.IntegerField()),
                ('config', models.JSONField(default=dict)),
                ('traces', models.JSONField(default=list)),
                ('diagnostics', models.JSONField(default=list)),
                ('circuit', models.TextField(blank=True)),
                ('estimate', models.FloatField()),
                ('approximation_ratio', models.FloatField()),
                ('approximation_ratio_raw', models.FloatField()),
                ('composition', models.JSONField(default=dict)),
                ('wall_time', models.FloatField(default=0)),
                ('hpo', models.BooleanField(default=False)),
                ('instance', models.ForeignKey(on_delete=django.db.models.deletion.CASCADE, related_name='runs', to='ansatz.probleminstance')),
            ],
            options={
                'ordering': ['instance', 'method', 'seed'],
            },
        ),
        migrations.AddConstraint(
            model_name='runrecord',
            constraint=models.UniqueConstraint(fields=('instance', 'method', 'seed', 'hpo'), name='unique_run'),
        ),
    ]
