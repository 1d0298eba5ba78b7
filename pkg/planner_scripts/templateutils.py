import os

import jinja2

import strutils

TEMPLATES_DIRECTORY = os.path.join(
    os.path.dirname(os.path.abspath(__file__)), 'templates'
)


def get_jenv():
    """Get the jinja environment.
    """
    jenv = jinja2.Environment(
        loader=jinja2.FileSystemLoader(TEMPLATES_DIRECTORY),
        autoescape=False,
        trim_blocks=True,
        lstrip_blocks=True,
        keep_trailing_newline=True
    )
    jenv.filters['pct'] = strutils.format_pct
    jenv.filters['fixed'] = strutils.format_fixed
    return jenv


def render_stats_report(**context):
    """Render the plain-text statistics report.
    """
    return get_jenv().get_template('stats_report.txt').render(**context)
