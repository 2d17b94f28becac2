"""
Common shared definitions, classes and util functions

"""
import enum

import numpy as np

# -----------------------------------------------------------
# Common definitions
# -----------------------------------------------------------

# Relative step for central finite differences, scaled by (1 + |x|)
FD_STEP = 1e-6

# Condition number above which a frame matrix counts as singular
FRAME_COND_LIMIT = 1e10

# Default relative tolerance for nullspace/rank decisions
NULLSPACE_TOL = 1e-7

# Significant digits used for every float written by the CLI
FLOAT_DIGITS = 17


# -----------------------------------------------------------
# Common Exceptions
# -----------------------------------------------------------
class VakoError(Exception):
    """
    Root of every numerical error raised by vako. Can be raised by any
    module; the command handler maps it to the numerical exit code.

    A failure time can be attached by whoever knows it (typically the
    flow integrator), and is included in the message.

    """
    def __init__(self, message, time=None):
        self.message = message
        self.time = time
        super().__init__(message)

    def __str__(self):
        if self.time is None:
            return self.message
        return f"{self.message} (at t={self.time:.17g})"


class NonFiniteEvaluation(VakoError):
    pass


class SingularJacobian(VakoError):
    pass


class MaxIterations(VakoError):
    def __init__(self, message, best_residual=None, time=None):
        self.best_residual = best_residual
        super().__init__(message, time=time)


class DegenerateFrame(VakoError):
    pass


class NotOnSubmanifold(VakoError):
    pass


class RankDeficientConstraint(VakoError):
    pass


class NotHyperRegular(VakoError):
    pass


class NotPositiveDefinite(VakoError):
    pass


class InconsistentControls(VakoError):
    pass


class NonHorizontal(VakoError):
    pass


class DimensionMismatch(VakoError):
    pass


class NoSolutionFound(VakoError):
    def __init__(self, message, best_residual=None):
        self.best_residual = best_residual
        super().__init__(message)


class UnknownProblem(VakoError):
    pass


# -----------------------------------------------------------
# Common classes
# -----------------------------------------------------------
class Regularity(enum.Enum):
    """
    Verdicts of the regularity tests.

    Inconclusive is only produced by sufficient conditions, which can
    never prove singularity.

    """
    Regular      = enum.auto()
    Singular     = enum.auto()
    Inconclusive = enum.auto()


class ContactVerdict(enum.Enum):
    NondegenerateOnAnnihilator = enum.auto()
    Degenerate                 = enum.auto()


class DiscreteCurve:
    """
    A curve sampled on a strictly increasing time grid, with optional
    frame controls u (one k-vector per sample).

    """
    def __init__(self, times, q, u=None):
        self.times = np.asarray(times, dtype=float)
        self.q = np.atleast_2d(np.asarray(q, dtype=float))
        self.u = None if u is None else np.atleast_2d(np.asarray(u, dtype=float))

        if self.times.ndim != 1 or len(self.times) < 2:
            raise DimensionMismatch("A curve needs at least two samples")
        if np.any(np.diff(self.times) <= 0):
            raise DimensionMismatch("Curve time grid must be strictly increasing")
        if self.q.shape[0] != len(self.times):
            raise DimensionMismatch(
                f"Curve has {len(self.times)} times but {self.q.shape[0]} points")
        if self.u is not None and self.u.shape[0] != len(self.times):
            raise DimensionMismatch(
                f"Curve has {len(self.times)} times but {self.u.shape[0]} controls")
        check_finite(self.q, "curve samples")

    def __len__(self):
        return len(self.times)

    def __repr__(self):
        return f"<DiscreteCurve({len(self)} samples, n={self.n})>"

    @property
    def n(self):
        return self.q.shape[1]

    @property
    def spacing(self):
        return float(np.max(np.diff(self.times)))

    @property
    def is_uniform(self):
        steps = np.diff(self.times)
        return bool(np.allclose(steps, steps[0], rtol=1e-9, atol=0.0))

    def velocities(self):
        """
        Centered differences in the interior, second order one-sided
        differences at the endpoints.

        """
        edge_order = 2 if len(self) > 2 else 1
        return np.gradient(self.q, self.times, axis=0, edge_order=edge_order)

    def velocity_error_bound(self):
        """
        Truncation estimate h^2/6 |q'''| of the differenced velocities.

        """
        if len(self) < 4:
            return 0.0
        h = self.spacing
        third = np.diff(self.q, n=3, axis=0) / h ** 3
        return float(h ** 2 / 6.0 * np.max(np.linalg.norm(third, axis=1)))

    def with_controls(self, u):
        return DiscreteCurve(self.times, self.q, u)


# -----------------------------------------------------------
# Common util functions
# -----------------------------------------------------------
def check_finite(value, what, time=None):
    """
    Raise NonFiniteEvaluation if value holds a NaN or Inf, else return it
    as a float array.

    """
    arr = np.asarray(value, dtype=float)
    if not np.all(np.isfinite(arr)):
        raise NonFiniteEvaluation(f"Non-finite value in {what}", time=time)
    return arr


def format_float(value):
    return format(float(value), f".{FLOAT_DIGITS}g")


def as_vector(value, size=None, what="vector"):
    vec = np.atleast_1d(np.asarray(value, dtype=float)).ravel()
    if size is not None and vec.shape[0] != size:
        raise DimensionMismatch(f"Expected {what} of size {size}, got {vec.shape[0]}")
    return vec
