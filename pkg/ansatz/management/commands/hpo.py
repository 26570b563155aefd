from django.core.management.base import BaseCommand, CommandError

from ansatz.utils.configs import HPO_METHODS
from ansatz.utils.exceptions import AnsatzError
from ansatz.utils.experiments import HPO_BUDGET, hpo_random_search, instance_names

from ._options import add_grid_arguments, add_output_arguments


class Command(BaseCommand):
    help = "Random search over the hyperparameter priors, one search per instance"

    def add_arguments(self, parser):
        parser.add_argument("--method", choices=HPO_METHODS, required=True)
        add_grid_arguments(parser)
        parser.add_argument("--budget", type=int, default=HPO_BUDGET)
        parser.add_argument("--seed", type=int, default=0)
        parser.add_argument("--config", default=None, help="Base KEY=VALUE config file")
        add_output_arguments(parser)

    def handle(self, *args, **options):
        names = instance_names(options["problem"], options["topology"], options["sizes"])
        try:
            summaries = hpo_random_search(
                options["method"],
                names,
                budget=options["budget"],
                seed=options["seed"],
                output_dir=options["output"],
                config_path=options["config"],
                workers=options["workers"],
            )
        except (AnsatzError, ValueError, FileNotFoundError) as error:
            raise CommandError(str(error))

        for name, summary in summaries.items():
            best = summary["best"]
            self.stdout.write(f"{name}: trial {best['trial']} reward {best['best_reward']:.4f}")
        self.stdout.write(self.style.SUCCESS(f"Searched {len(summaries)} instances"))
