"""
Utility functions for the spatial-memory pattern toolkit.
Contains helpers for logging, CSV artifacts with metadata headers, and console display.
"""

import csv
import datetime
import logging
import math
import pathlib

from src.utils import config

logger = logging.getLogger('memopat')

LEVELS = ['DEBUG', 'INFO', 'WARNING', 'ERROR']


def setup_logging(level=None):
    """
    Configure the root logger once with a single stream handler.

    Args:
        level: Level name; defaults to config.LOG_LEVEL, or DEBUG when config.DEBUG_MODE
    """
    if level is None:
        level = 'DEBUG' if config.DEBUG_MODE else config.LOG_LEVEL
    root = logging.getLogger()
    if not any(getattr(h, '_memopat', False) for h in root.handlers):
        handler = logging.StreamHandler()
        handler.setFormatter(logging.Formatter('[%(levelname)s] %(name)s: %(message)s'))
        handler._memopat = True
        root.addHandler(handler)
    root.setLevel(level)


def log_message(message, level='INFO'):
    """
    Log a message through the toolkit logger.

    Args:
        message: Message to log
        level: Log level ('DEBUG', 'INFO', 'WARNING', 'ERROR')
    """
    if level not in LEVELS:
        raise ValueError(f"Unknown log level: {level}")
    if level == 'DEBUG' and not config.DEBUG_MODE:
        return
    logger.log(getattr(logging, level), message)


def format_number(value):
    """Shortest text that reads back to the same float."""
    if isinstance(value, bool):
        return str(value)
    if isinstance(value, float):
        if math.isnan(value) or math.isinf(value):
            return str(value)
        return format(value, config.CSV_FLOAT_FORMAT)
    return str(value)


def metadata_lines(run_config=None, command=None, seed=None):
    """
    Comment block written above every CSV header.

    The `generated` line is the only one that changes between identical runs.
    """
    lines = [
        f"tool = {config.TOOL_NAME}",
        f"version = {config.TOOL_VERSION}",
        f"generated = {datetime.datetime.now(datetime.timezone.utc).isoformat(timespec='seconds')}",
    ]
    if command is not None:
        lines.append(f"command = {command}")
    if seed is not None:
        lines.append(f"seed = {seed}")
    if run_config is not None:
        for key, value in run_config.resolved_items():
            if value is None:
                continue
            if isinstance(value, list):
                value = ','.join(format_number(float(v)) for v in value)
            lines.append(f"config.{key} = {format_number(value)}")
    return lines


def ensure_output_dir(path):
    directory = pathlib.Path(path)
    directory.mkdir(parents=True, exist_ok=True)
    return directory


def write_csv(path, rows, columns, metadata=None):
    """
    Write rows (dicts) to a CSV file preceded by '# ' metadata lines.

    Args:
        path: Destination file
        rows: Iterable of dicts
        columns: Column order; extra keys in rows are ignored
        metadata: Optional list of metadata lines

    Returns:
        pathlib.Path of the written file
    """
    path = pathlib.Path(path)
    with path.open('w', newline='', encoding='utf-8') as handle:
        for line in metadata or []:
            handle.write(f"# {line}\n")
        writer = csv.DictWriter(handle, fieldnames=columns, extrasaction='ignore', lineterminator='\n')
        writer.writeheader()
        for row in rows:
            writer.writerow({key: format_number(row.get(key)) for key in columns})
    logger.debug("wrote %s", path)
    return path


def parse_cell(text):
    if text in ('True', 'False'):
        return text == 'True'
    if text in ('', 'None'):
        return None
    try:
        return int(text)
    except ValueError:
        pass
    try:
        return float(text)
    except ValueError:
        return text


def read_csv_records(path):
    """
    Read a CSV written by write_csv.

    Returns:
        (metadata dict, list of row dicts with numbers and booleans restored)
    """
    metadata = {}
    body = []
    with pathlib.Path(path).open(encoding='utf-8') as handle:
        for line in handle:
            if line.startswith('#'):
                key, _, value = line[1:].strip().partition(' = ')
                metadata[key] = value
            else:
                body.append(line)
    rows = [{key: parse_cell(value) for key, value in row.items()} for row in csv.DictReader(body)]
    return metadata, rows


def format_table(rows, columns, precision=6):
    """Fixed-width text table for console output."""
    def cell(value):
        if isinstance(value, float):
            return f"{value:.{precision}g}"
        return str(value)

    body = [[cell(row.get(c)) for c in columns] for row in rows]
    widths = [max(len(c), *(len(r[i]) for r in body)) if body else len(c) for i, c in enumerate(columns)]
    lines = ['  '.join(c.rjust(w) for c, w in zip(columns, widths))]
    lines.extend('  '.join(v.rjust(w) for v, w in zip(r, widths)) for r in body)
    return '\n'.join(lines)


def print_separator():
    """Print a separator line."""
    print(config.SEPARATOR)
