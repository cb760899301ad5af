import logging
import sys
import json

from .utils import json_serial


class Logger(object):
    def __init__(self, name: str, debug=False):
        level = logging.DEBUG if debug else logging.INFO
        self.logging = logging.getLogger(name)

        # if logger already exists don't add handlers
        if len(self.logging.handlers):
            self.logging.handlers[0].setLevel(level)
            self.logging.setLevel(level)
            return

        # stdout may carry a report
        handler = logging.StreamHandler(sys.stderr)
        formatter = logging.Formatter('%(message)s')
        handler.setFormatter(formatter)
        handler.setLevel(level)

        self.logging.addHandler(handler)
        self.logging.setLevel(level)
        self.logging.propagate = False

    def log_event(self, event: str, **fields):
        if not self.logging.isEnabledFor(logging.DEBUG):
            return
        self.logging.debug(f'{event}: {json.dumps(fields, default=json_serial)}')

    def warning(self, message: str):
        self.logging.warning(message)

    def error(self, message: str):
        self.logging.error(message)

    def debug(self, message: str):
        self.logging.debug(message)


def get_logger(component: str, debug=None) -> Logger:
    '''Logger for a library component; keeps the level the CLI configured'''
    name = f'ppm_game.{component}'
    if debug is None:
        debug = logging.getLogger(name).level == logging.DEBUG
    return Logger(name=name, debug=debug)


def set_debug(debug: bool, components=('scenario', 'interior', 'verifier', 'oracle', 'dynamics', 'cli')):
    '''Switch every component logger at once'''
    for component in components:
        Logger(name=f'ppm_game.{component}', debug=debug)
