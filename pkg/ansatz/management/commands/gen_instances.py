from django.core.management.base import BaseCommand, CommandError

from ansatz.utils.exceptions import AnsatzError
from ansatz.utils.experiments import INSTANCE_SIZES, gen_instances


class Command(BaseCommand):
    help = "Generate the benchmark graphs and their QUBO encodings"

    def add_arguments(self, parser):
        parser.add_argument("--n", "--sizes", dest="sizes", nargs="+", type=int,
                            default=list(INSTANCE_SIZES))
        parser.add_argument("--output", default=None)

    def handle(self, *args, **options):
        try:
            graphs, qubos = gen_instances(options["output"], options["sizes"])
        except AnsatzError as error:
            raise CommandError(str(error))
        self.stdout.write(
            self.style.SUCCESS(f"{len(graphs)} graphs and {len(qubos)} QUBO instances ready")
        )
