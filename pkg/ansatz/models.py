from django.db import models


class ProblemInstance(models.Model):

    name = models.CharField(max_length=80, unique=True)
    problem = models.CharField(max_length=20)
    topology = models.CharField(max_length=40)
    topology_label = models.CharField(max_length=40)
    n = models.IntegerField()
    edges = models.JSONField(default=list)
    qubo = models.JSONField(default=list)
    penalty = models.FloatField(default=0)
    offset = models.FloatField(default=0)
    h_min = models.FloatField()
    h_max = models.FloatField()
    argmin = models.CharField(max_length=32)

    class Meta:
        ordering = ["n", "problem", "topology"]

    def __str__(self):
        return self.name


class RunRecord(models.Model):

    instance = models.ForeignKey(
        ProblemInstance, on_delete=models.CASCADE, related_name="runs"
    )
    method = models.CharField(max_length=20)
    seed = models.IntegerField()
    config = models.JSONField(default=dict)
    traces = models.JSONField(default=list)
    diagnostics = models.JSONField(default=list)
    circuit = models.TextField(blank=True)
    estimate = models.FloatField()
    approximation_ratio = models.FloatField()
    approximation_ratio_raw = models.FloatField()
    composition = models.JSONField(default=dict)
    wall_time = models.FloatField(default=0)
    hpo = models.BooleanField(default=False)

    class Meta:
        ordering = ["instance", "method", "seed"]
        constraints = [
            models.UniqueConstraint(
                fields=["instance", "method", "seed", "hpo"], name="unique_run"
            )
        ]

    def __str__(self):
        return f"{self.instance.name}/{self.method}/seed-{self.seed}"
