"""Small configuration files derived from the reference config"""
import configparser
from pathlib import Path

BASE_CONFIG = Path(__file__).parent.parent / 'configs' / 'reference.cfg'

# Keep simulations in tests fast
FAST = {
    'sim.n_steps': '20',
    'sim.n_paths': '50',
    'sim.chunk_size': '20',
    'dpp.n_outer': '40',
    'dpp.n_inner': '5',
    'dpp.n_steps': '20',
}


def write_config(directory, overrides=None, name='run.cfg') -> str:
    """Copy the reference config with `section.key` overrides; None removes a key"""
    parser = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=('#', ';'))
    parser.optionxform = str
    parser.read(BASE_CONFIG, encoding='utf-8')
    for key, value in {**FAST, **(overrides or {})}.items():
        section, _, option = key.partition('.')
        if value is None:
            parser.remove_option(section, option)
            continue
        if not parser.has_section(section):
            parser.add_section(section)
        parser.set(section, option, str(value))

    path = Path(directory) / name
    with open(path, 'w', encoding='utf-8') as f:
        parser.write(f)
    return str(path)
