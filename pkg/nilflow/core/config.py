"""
Configuration for nilflow runs.

Holds the summation budget read from the environment, the validated
``RunConfig`` built from CLI arguments, and the JSON document describing a
glued residual action.
"""

import json
import logging
import os
from dataclasses import dataclass, field
from fractions import Fraction
from importlib import resources
from pathlib import Path
from typing import Any, Dict, List, Optional, Union

from nilflow.core.exceptions import ConfigError, ParseError

# Configure logging
logger = logging.getLogger(__name__)

BUDGET_ENV = 'NILFLOW_BUDGET'
DEFAULT_BUDGET = 2 ** 20

DEFAULT_TOL = Fraction(1, 10 ** 9)
DEFAULT_SEED = 0
DEFAULT_BOX = 2
DEFAULT_EPS = Fraction(1, 10)
DEFAULT_DEPTH = 8
DEFAULT_WINDOW = (-20, 20)
DEFAULT_GRID_BITS = 10


def summation_budget() -> int:
    """
    Hard cap on summation radius and search steps.

    Returns:
        The integer in NILFLOW_BUDGET, or 2**20 when unset

    Raises:
        ConfigError: if the variable is set but not a positive integer
    """
    raw = os.getenv(BUDGET_ENV)
    if raw is None or raw.strip() == '':
        return DEFAULT_BUDGET
    try:
        value = int(raw)
    except ValueError as e:
        raise ConfigError(f"{BUDGET_ENV} must be a positive integer, got {raw!r}") from e
    if value <= 0:
        raise ConfigError(f"{BUDGET_ENV} must be a positive integer, got {raw!r}")
    return value


def parse_positive_rational(text: Union[str, int, Fraction], name: str) -> Fraction:
    try:
        value = Fraction(str(text).strip())
    except (ValueError, ZeroDivisionError) as e:
        raise ConfigError(f"{name} must be a rational number, got {text!r}") from e
    if value <= 0:
        raise ConfigError(f"{name} must be positive, got {text!r}")
    return value


@dataclass
class RunConfig:
    """
    Validated parameters of one CLI invocation.

    Attributes:
        command: Subcommand name
        n: Dimension of the unipotent group
        K: Series constant (K >= 1)
        tol: Enclosure width target
        seed: Seed fixing all sampling
        box: Half-width of lattice boxes
        eps: Calibration target
        depth: Distortion probe depth
        measure: Measure text for translation numbers
        words: Optional path to a words file
        out: Optional output path (stdout when None)
        quick: Reduced sample counts for verify-all
    """
    command: str
    n: int = 2
    K: Fraction = Fraction(1)
    tol: Fraction = DEFAULT_TOL
    seed: int = DEFAULT_SEED
    box: int = DEFAULT_BOX
    eps: Fraction = DEFAULT_EPS
    depth: int = DEFAULT_DEPTH
    measure: str = 'integers'
    words: Optional[Path] = None
    out: Optional[Path] = None
    quick: bool = False

    @classmethod
    def from_args(cls, args) -> 'RunConfig':
        """
        Build a RunConfig from an argparse namespace.

        Missing attributes fall back to the defaults.

        Raises:
            ConfigError: on tol <= 0, K < 1, n < 1 or box < 0
        """
        def pick(name, default):
            value = getattr(args, name, None)
            return default if value is None else value

        config = cls(
            command=pick('command', ''),
            n=int(pick('n', 2)),
            K=parse_positive_rational(pick('K', 1), 'K'),
            tol=parse_positive_rational(pick('tol', DEFAULT_TOL), 'tol'),
            seed=int(pick('seed', DEFAULT_SEED)),
            box=int(pick('box', DEFAULT_BOX)),
            eps=parse_positive_rational(pick('eps', DEFAULT_EPS), 'eps'),
            depth=int(pick('depth', DEFAULT_DEPTH)),
            measure=str(pick('measure', 'integers')),
            words=Path(args.words) if getattr(args, 'words', None) else None,
            out=Path(args.out) if getattr(args, 'out', None) else None,
            quick=bool(getattr(args, 'quick', False)),
        )
        if config.n < 1:
            raise ConfigError(f"n must be at least 1, got {config.n}")
        if config.K < 1:
            raise ConfigError(f"K must be at least 1, got {config.K}")
        if config.box < 0:
            raise ConfigError(f"box must be non-negative, got {config.box}")
        if config.depth < 0:
            raise ConfigError(f"depth must be non-negative, got {config.depth}")
        return config


@dataclass
class BlockSpec:
    """One block I_m = [1/(m+1), 1/m] of a glued action."""
    m: int
    n: int
    K: Optional[Fraction]  # None means calibrate against 2**-m
    images: Dict[str, str] = field(default_factory=dict)


@dataclass
class WitnessSpec:
    word: str
    block: int


@dataclass
class GluedActionConfig:
    """
    Parsed GluedAction document.

    Example document::

        {"blocks": [{"m": 1, "n": 3, "K": 100, "images": {"a": "s1", "b": "s2"}}],
         "witnesses": [{"word": "a b A B", "block": 1}]}
    """
    blocks: List[BlockSpec] = field(default_factory=list)
    witnesses: List[WitnessSpec] = field(default_factory=list)
    source: Optional[str] = None

    @classmethod
    def from_dict(cls, data: Dict[str, Any], source: Optional[str] = None) -> 'GluedActionConfig':
        if not isinstance(data, dict) or 'blocks' not in data:
            raise ConfigError("GluedAction config needs a 'blocks' list")
        config = cls(source=source)
        seen = set()
        try:
            for entry in data['blocks']:
                m = int(entry['m'])
                n = int(entry['n'])
                if m < 1 or n < 1:
                    raise ConfigError(f"Block needs m >= 1 and n >= 1, got m={m}, n={n}")
                if m in seen:
                    raise ConfigError(f"Block m={m} configured twice")
                seen.add(m)
                raw_k = entry.get('K', 'auto')
                if isinstance(raw_k, str) and raw_k.strip().lower() == 'auto':
                    k_value = None
                else:
                    k_value = parse_positive_rational(raw_k, f"K of block {m}")
                    if k_value < 1:
                        raise ConfigError(f"K of block {m} must be at least 1")
                images = entry.get('images', {})
                if not isinstance(images, dict):
                    raise ConfigError(f"images of block {m} must be an object")
                config.blocks.append(BlockSpec(m=m, n=n, K=k_value,
                                               images={str(k): str(v) for k, v in images.items()}))
            for entry in data.get('witnesses', []):
                config.witnesses.append(WitnessSpec(word=str(entry['word']), block=int(entry['block'])))
        except (KeyError, TypeError, ValueError, ParseError) as e:
            if isinstance(e, ConfigError):
                raise
            raise ConfigError(f"Malformed GluedAction config: {e}") from e
        config.blocks.sort(key=lambda block: block.m)
        for witness in config.witnesses:
            if witness.block not in seen:
                raise ConfigError(f"Witness '{witness.word}' names unknown block {witness.block}")
        return config

    @classmethod
    def load(cls, config_path: Union[str, Path]) -> 'GluedActionConfig':
        """
        Load a GluedAction document from disk.

        Raises:
            ConfigError: if the file is missing or not a valid document
        """
        path = Path(config_path)
        try:
            with open(path, 'r', encoding='utf-8') as f:
                data = json.load(f)
        except FileNotFoundError as e:
            raise ConfigError(f"Config file not found: {path}") from e
        except json.JSONDecodeError as e:
            raise ConfigError(f"Could not parse {path}: {e}") from e
        logger.debug(f"Loaded glued action config from {path}")
        return cls.from_dict(data, source=str(path))


def load_bundled_demo() -> GluedActionConfig:
    """The F2 residual-gluing demo shipped in nilflow/data."""
    text = resources.files('nilflow.data').joinpath('f2_demo.json').read_text(encoding='utf-8')
    return GluedActionConfig.from_dict(json.loads(text), source='f2_demo.json')
