from dataclasses import dataclass

import numpy as np

FLAG_OK = 0
FLAG_TRUNCATED = 1


@dataclass(frozen=True)
class Trajectory:
    """Samples of one particle. Arrays are aligned on `times`."""

    id: int
    times: np.ndarray
    positions: np.ndarray  # (n_samples, d)
    velocities: np.ndarray  # (n_samples, d)
    q: np.ndarray
    ke: np.ndarray
    flag: int = FLAG_OK

    @property
    def truncated(self) -> bool:
        return self.flag == FLAG_TRUNCATED


@dataclass(frozen=True)
class Ensemble:
    """Lock-step trajectories sharing `times`.

    positions/velocities are (n_samples, n, d); q/ke are (n_samples, n).
    Samples after a trajectory's truncation are NaN; lengths[i] counts the
    valid samples of trajectory i.
    """

    times: np.ndarray
    positions: np.ndarray
    velocities: np.ndarray
    q: np.ndarray
    ke: np.ndarray
    lengths: np.ndarray
    flags: np.ndarray
    seed: int = 0
    source: str = ""

    def __post_init__(self):
        if self.times.size > 1 and np.any(np.diff(self.times) <= 0):
            raise ValueError("sample times must be strictly increasing")
        if self.positions.shape[:2] != (self.times.size, self.lengths.size):
            raise ValueError("positions do not match times and trajectory count")

    @property
    def size(self) -> int:
        return int(self.lengths.size)

    @property
    def dimension(self) -> int:
        return int(self.positions.shape[2])

    def __len__(self) -> int:
        return self.size

    def trajectory(self, i: int) -> Trajectory:
        n = int(self.lengths[i])
        return Trajectory(id=i,
                          times=self.times[:n],
                          positions=self.positions[:n, i],
                          velocities=self.velocities[:n, i],
                          q=self.q[:n, i],
                          ke=self.ke[:n, i],
                          flag=int(self.flags[i]))

    def __iter__(self):
        return (self.trajectory(i) for i in range(self.size))

    def sample_index(self, t: float) -> int:
        return int(np.argmin(np.abs(self.times - t)))

    def alive_at(self, index: int) -> np.ndarray:
        return self.lengths > index

    def positions_at(self, t: float) -> np.ndarray:
        """Positions of the trajectories still alive at the sample nearest t."""
        k = self.sample_index(t)
        return self.positions[k, self.alive_at(k)]
