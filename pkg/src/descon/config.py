"""Central defaults for tolerances, solver settings and verification grids.

Every tunable used by the pipeline lives here so that the CLI, the library
and the tests share one source of truth.  Precedence when running the CLI:
command-line flags > config file > these defaults.
"""

import json
from dataclasses import dataclass, fields, replace


@dataclass(frozen=True)
class Config:
    # numerical rank threshold, relative to the largest singular value
    rank_tol: float = 1e-10
    # condition number above which Q or S is treated as numerically singular
    cond_limit: float = 1e12
    # strictness margin: "< 0" is realised as "<= -delta*I" with
    # delta = margin_scale * (1 + ||F0||_2), per constraint block
    margin_scale: float = 1e-7
    # interior-point backend settings
    solver_tol: float = 1e-8
    solver_max_iter: int = 100
    # frequency sweep
    grid_points: int = 4096
    refine_tol: float = 1e-8
    # uncertainty sampling
    delta_grid: int = 41
    samples: int = 200
    seed: int = 0
    # synthesis knob
    alpha: float = 0.0

    def replace(self, **kw):
        return replace(self, **kw)

    @classmethod
    def from_file(cls, path):
        """Load a JSON config file; unknown keys are rejected.

        Dotted solver keys are accepted as aliases: solver.margin,
        solver.max_iter, solver.tol.
        """
        aliases = {"solver.margin": "margin_scale",
                   "solver.max_iter": "solver_max_iter",
                   "solver.tol": "solver_tol"}
        with open(path) as fh:
            data = json.load(fh)
        data = {aliases.get(k, k): v for k, v in data.items()}
        known = {f.name for f in fields(cls)}
        bad = set(data) - known
        if bad:
            raise ValueError(f"unknown config keys: {sorted(bad)}")
        return cls(**data)


DEFAULTS = Config()
