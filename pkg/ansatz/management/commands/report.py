from django.conf import settings
from django.core.management.base import BaseCommand, CommandError

from ansatz.utils.configs import METHODS
from ansatz.utils.reports import report


class Command(BaseCommand):
    help = "Write approximation ratio and composition tables and figures from run records"

    def add_arguments(self, parser):
        parser.add_argument("--method", nargs="*", choices=METHODS, default=None)
        parser.add_argument("--n", "--sizes", dest="sizes", nargs="+", type=int, default=None)
        parser.add_argument("--output", default=None)

    def handle(self, *args, **options):
        output_dir = options["output"] or settings.ANSATZ_OUTPUT_ROOT
        try:
            paths = report(output_dir, options["method"], options["sizes"])
        except ValueError as error:
            raise CommandError(str(error))
        for name, path in paths.items():
            self.stdout.write(f"{name}: {path}")
        self.stdout.write(self.style.SUCCESS("Report written"))
