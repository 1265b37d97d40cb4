from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from ._validation import check_populations, check_times
from .exceptions import InputError

COLUMNS = ("p00", "p1m1", "p2m2")
STDERR_COLUMNS = ("se00", "se1m1", "se2m2")


@dataclass(eq=False)
class PopulationTrajectory:
    """Populations of |0,0>, S|1,-1>, S|2,-2> on a time grid (seconds).

    ``populations`` has shape (n_times, 3). ``stderr``, when present, holds the
    matching per-point standard errors.
    """

    times: np.ndarray
    populations: np.ndarray
    stderr: Optional[np.ndarray] = None
    notes: list = field(default_factory=list)

    def __post_init__(self):
        self.times = check_times(self.times)
        self.populations = check_populations(self.populations, len(self.times))
        if self.stderr is not None:
            self.stderr = check_populations(self.stderr, len(self.times), name="stderr")
            if np.any(self.stderr < 0):
                raise InputError("standard errors must be nonnegative")

    def __len__(self):
        return len(self.times)

    @property
    def p00(self):
        return self.populations[:, 0]

    @property
    def p1m1(self):
        return self.populations[:, 1]

    @property
    def p2m2(self):
        return self.populations[:, 2]

    def totals(self):
        return self.populations.sum(axis=1)

    def normalized_to_initial(self):
        """Divide every series by the |0,0> population at the first time point."""
        p0 = self.populations[0, 0]
        if p0 <= 0:
            raise InputError("initial |0,0> population is zero")
        se = None if self.stderr is None else self.stderr / p0
        return PopulationTrajectory(self.times, self.populations / p0, se, list(self.notes))
