from django.core.management.base import BaseCommand, CommandError

from ansatz.utils.configs import DEFAULT_SEEDS, METHODS, load_experiment_config
from ansatz.utils.exceptions import AnsatzError
from ansatz.utils.experiments import run_experiment

from ._options import add_grid_arguments, add_output_arguments


class Command(BaseCommand):
    help = "Run one method over a grid of instances, one record per instance and seed"

    def add_arguments(self, parser):
        parser.add_argument("--method", choices=METHODS, required=True)
        add_grid_arguments(parser)
        parser.add_argument("--seeds", type=int, default=DEFAULT_SEEDS,
                            help="Number of independent runs, seeded 0..seeds-1")
        parser.add_argument("--config", default=None, help="KEY=VALUE config file")
        parser.add_argument("--tuned", action="store_true",
                            help="Use each instance's n=8 hpo config for its problem and topology")
        parser.add_argument("--resume", action="store_true",
                            help="Skip runs already stored in the database")
        add_output_arguments(parser)

    def handle(self, *args, **options):
        try:
            config = load_experiment_config(
                options["method"],
                options["problem"],
                options["topology"],
                sizes=options["sizes"],
                seeds=range(options["seeds"]),
                path=options["config"],
                output_dir=options["output"],
                tuned=options["tuned"],
            )
            payloads = run_experiment(config, workers=options["workers"], resume=options["resume"])
        except (AnsatzError, ValueError, FileNotFoundError) as error:
            raise CommandError(str(error))

        for payload in payloads:
            self.stdout.write(
                f"{payload['instance']} seed={payload['seed']} "
                f"A.R.={payload['approximation_ratio']:.4f}"
            )
        self.stdout.write(self.style.SUCCESS(f"{len(payloads)} runs of {config.method} stored"))
