"""
Django settings for AnsatzBench project.

The project has no web surface: Django provides the ORM that stores problem
instances and run records, the management-command CLI and the test runner.

Every value that differs between machines is read from the environment (or a
``.env`` file) through python-decouple.
"""

import os
from decouple import config

# Build paths inside the project like this: os.path.join(BASE_DIR, ...)
BASE_DIR = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))

# Only used by Django internals (no sessions or signed cookies are served)
SECRET_KEY = config("SECRET", default="ansatzbench-local-only")

DEBUG = config("DEBUG", default=False, cast=bool)

ALLOWED_HOSTS = []


# Application definition

INSTALLED_APPS = [
    "ansatz",
]

MIDDLEWARE = []


# Experiment outputs: instances, run records, HPO results, tables and plots.
# The sqlite database below always lives here, so the directory has to exist
# before Django connects; a command's --output moves its files, never the database.

ANSATZ_OUTPUT_ROOT = config(
    "ANSATZ_OUTPUT_ROOT", default=os.path.join(BASE_DIR, "output")
)
os.makedirs(ANSATZ_OUTPUT_ROOT, exist_ok=True)

# Worker processes used by the run and hpo commands
ANSATZ_WORKERS = config("ANSATZ_WORKERS", default=1, cast=int)

ANSATZ_LOG_LEVEL = config("ANSATZ_LOG_LEVEL", default="INFO")


# Database
# https://docs.djangoproject.com/en/4.0/ref/settings/#databases

DATABASES = {
    "default": {
        "ENGINE": "django.db.backends.sqlite3",
        "NAME": os.path.join(ANSATZ_OUTPUT_ROOT, "ansatz.sqlite3"),
    }
}

# Default primary key field type
# https://docs.djangoproject.com/en/4.0/ref/settings/#default-auto-field

DEFAULT_AUTO_FIELD = "django.db.models.BigAutoField"


# Logging
# https://docs.djangoproject.com/en/4.0/topics/logging/

LOGGING = {
    "version": 1,
    "disable_existing_loggers": False,
    "formatters": {
        "verbose": {
            "format": "{asctime} {levelname} {name}: {message}",
            "style": "{",
        },
    },
    "handlers": {
        "console": {
            "class": "logging.StreamHandler",
            "formatter": "verbose",
        },
    },
    "loggers": {
        "ansatz": {
            "handlers": ["console"],
            "level": ANSATZ_LOG_LEVEL,
            "propagate": False,
        },
    },
}


# Internationalization
# https://docs.djangoproject.com/en/4.0/topics/i18n/

LANGUAGE_CODE = "en-us"

TIME_ZONE = "UTC"

USE_I18N = False

USE_TZ = True
