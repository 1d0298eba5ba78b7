import math


def format_float(x):
    """Format a float for CSV output so that parsing it back gives the same
    value.

    Parameters
    ----------
    x : float
        The value.

    Returns
    -------
    text : str
        The shortest round-tripping representation.
    """
    return repr(float(x))


def format_bool(x):
    return 'true' if x else 'false'


def parse_bool(text):
    """Parse 'true'/'false' (any case). Raises ValueError otherwise.
    """
    lowered = text.strip().lower()
    if lowered == 'true':
        return True
    elif lowered == 'false':
        return False
    else:
        raise ValueError('Value of "%s" is not a boolean!' % text)


def format_pct(x, digits=2):
    """Format a percentage, e.g. 7.6 -> '7.60%'. NaN gives 'n/a'.
    """
    if x is None or math.isnan(x):
        return 'n/a'
    return '%.*f%%' % (digits, x)


def format_fixed(x, digits=3):
    if x is None or math.isnan(x):
        return 'n/a'
    return '%.*f' % (digits, x)

