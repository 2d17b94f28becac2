import json
import os

from vako.geometry import LevelSet, Point, Whole


# Environment variable capping multi-start worker threads
THREADS_ENV = "VAKO_THREADS"

DEFAULT_T_SPAN = [0.0, 1.0]
DEFAULT_IVP_STEPS = 1000
DEFAULT_BVP_STEPS = 200
DEFAULT_TOLERANCE = 1e-10


class ConfigError(Exception):
    def __init__(self, error, field, object_name):
        self.error = error
        self.field = field
        self.object_name = object_name

    def __str__(self):
        msg = f"{self.error} '{self.field}'"
        if self.object_name:
            msg += f" in {self.object_name}"
        return msg


class json_field(object):
    """
    Decorator for config field.

    On first access, it looks up field from JSON data, validates and then
    replaces self with value for future lookups.

    list_cls converts each element of a list, obj_cls converts a nested
    object, and check is called on the final value and returns an error
    string when it is invalid.

    """

    def __init__(self, field, default=None, mandatory=False, list_cls=None,
                 obj_cls=None, check=None):
        self._attr_name = None
        self._field = field
        self._default = default
        self._mandatory = mandatory
        self._list_cls = list_cls
        self._obj_cls = obj_cls
        self._check = check

    def __call__(self, fn):
        self._attr_name = fn.__name__
        return self

    def __get__(self, inst, cls):
        # Check whether field is mandatory and present
        if self._mandatory and self._field not in inst.data:
            raise ConfigError("Missing mandatory field",
                              self._field, inst._object_name)

        # Get field from JSON data
        attr = inst.data.get(self._field, self._default)

        # If we have a list class, then initialize each element
        # of the list with it.
        if self._list_cls is not None and attr is not None:
            if not isinstance(attr, list):
                raise ConfigError("Expected list for",
                                  self._field, inst._object_name)
            try:
                attr = [self._list_cls(a) for a in attr]
            except (TypeError, ValueError):
                raise ConfigError(f"Expected {self._list_cls.__name__} elements for",
                                  self._field, inst._object_name) from None

        if self._obj_cls is not None and attr is not None:
            attr = self._obj_cls(attr, f"{self._field}")

        if self._check is not None and attr is not None:
            error = self._check(attr)
            if error:
                raise ConfigError(error, self._field, inst._object_name)

        # Now we have the value, store it for future calls
        setattr(inst, self._attr_name, attr)

        return attr


class _Base:
    def __init__(self, data, name=None):
        self._name = name
        if not isinstance(data, dict):
            raise ConfigError("Expected object for", name or "file",
                              None)
        self.data = data

        # Look for unexpected JSON fields
        expected = [v._field for v in self.__class__.__dict__.values()
                             if isinstance(v, json_field)]
        bad = [f for f in data.keys() if f not in expected]
        if bad:
            raise ConfigError("Unexpected field(s)",
                              "' ,'".join(bad), self._object_name)

        # Trigger all the json field properites to read the
        # JSON and validate fields
        for name, val in self.__class__.__dict__.items():
            if isinstance(val, json_field):
                getattr(self, name)

        self.validate()

    @property
    def _object_name(self):
        return self._name

    def validate(self):
        pass


# -----------------------------------------------------------
# Field checks
# -----------------------------------------------------------
def _is_number(value):
    return isinstance(value, (int, float)) and not isinstance(value, bool)


def _positive_int(value):
    if not isinstance(value, int) or isinstance(value, bool) or value < 1:
        return "Expected positive integer for"
    return None


def _positive_number(value):
    if not _is_number(value) or value <= 0:
        return "Expected positive number for"
    return None


def _number_list(value):
    if not isinstance(value, list) or not all(_is_number(v) for v in value):
        return "Expected list of numbers for"
    return None


def _matrix(value):
    if (not isinstance(value, list) or not value or
            not all(_number_list(row) is None and len(row) == len(value[0])
                    for row in value)):
        return "Expected list of equal length number lists for"
    return None


def _t_span(value):
    if _number_list(value) or len(value) != 2 or not value[1] > value[0]:
        return "Expected increasing [t0, t1] for"
    return None


def _eps(value):
    if not _is_number(value) or not 1e-6 <= value <= 1e-2:
        return "Expected number in [1e-6, 1e-2] for"
    return None


def _list(value):
    if not isinstance(value, list):
        return "Expected list for"
    return None


# -----------------------------------------------------------
# Blocks
# -----------------------------------------------------------
class Submanifold(_Base):
    TYPES = ("point", "levelset", "whole")

    @json_field("type", mandatory=True,
                check=lambda v: None if v in Submanifold.TYPES
                else f"Expected one of {', '.join(Submanifold.TYPES)} for")
    def type(self):
        pass

    @json_field("at", check=_number_list)
    def at(self):
        pass

    @json_field("rows", check=_matrix)
    def rows(self):
        pass

    @json_field("offset", check=_number_list)
    def offset(self):
        pass

    def validate(self):
        if self.type == "point" and self.at is None:
            raise ConfigError("Point needs field", "at", self._object_name)
        if self.type == "levelset":
            if self.rows is None or self.offset is None:
                raise ConfigError("Level set needs fields", "rows' and 'offset",
                                  self._object_name)
            if len(self.rows) != len(self.offset):
                raise ConfigError("Level set rows do not match", "offset",
                                  self._object_name)

    def build(self, n):
        """The geometry submanifold in a chart of dimension n."""
        if self.type == "point":
            if len(self.at) != n:
                raise ConfigError(f"Expected {n} coordinates for", "at", self._object_name)
            return Point(self.at)
        if self.type == "levelset":
            if len(self.rows[0]) != n:
                raise ConfigError(f"Expected rows of length {n} for", "rows",
                                  self._object_name)
            return LevelSet.affine(self.rows, self.offset)
        return Whole(n)


class Inline(_Base):
    @json_field("name", default="inline")
    def name(self):
        pass

    @json_field("n", mandatory=True, check=_positive_int)
    def n(self):
        pass

    @json_field("k", mandatory=True, check=_positive_int)
    def k(self):
        pass

    @json_field("frame", mandatory=True, check=_list)
    def frame(self):
        pass

    @json_field("annihilator", default=[], check=_list)
    def annihilator(self):
        pass

    @json_field("complement", default=[], check=_list)
    def complement(self):
        pass

    @json_field("metric", check=_list)
    def metric(self):
        pass

    @json_field("potential", check=_list)
    def potential(self):
        pass

    @json_field("lagrangian", check=_list)
    def lagrangian(self):
        pass

    def validate(self):
        if self.k > self.n:
            raise ConfigError("Distribution rank exceeds n for", "k", self._object_name)
        if (self.metric is None) == (self.lagrangian is None):
            raise ConfigError("Exactly one Lagrangian description needed",
                              "metric' or 'lagrangian", self._object_name)

    def as_dict(self):
        return {"name": self.name, "n": self.n, "k": self.k, "frame": self.frame,
                "annihilator": self.annihilator, "complement": self.complement,
                "metric": self.metric, "potential": self.potential,
                "lagrangian": self.lagrangian}


class Problem(_Base):
    @json_field("builtin")
    def builtin(self):
        pass

    @json_field("dim", check=_positive_int)
    def dim(self):
        pass

    @json_field("inline", obj_cls=Inline)
    def inline(self):
        pass

    def validate(self):
        if (self.builtin is None) == (self.inline is None):
            raise ConfigError("Exactly one problem source needed",
                              "builtin' or 'inline", self._object_name)
        if self.builtin is not None and not isinstance(self.builtin, str):
            raise ConfigError("Expected string for", "builtin", self._object_name)


class Ivp(_Base):
    @json_field("q0", check=_number_list)
    def q0(self):
        pass

    @json_field("p0", check=_number_list)
    def p0(self):
        pass

    @json_field("t-span", default=DEFAULT_T_SPAN, check=_t_span)
    def t_span(self):
        pass

    @json_field("steps", default=DEFAULT_IVP_STEPS, check=_positive_int)
    def steps(self):
        pass


class Bvp(_Base):
    @json_field("P", mandatory=True, obj_cls=Submanifold)
    def P(self):
        pass

    @json_field("Q", mandatory=True, obj_cls=Submanifold)
    def Q(self):
        pass

    @json_field("t-span", default=DEFAULT_T_SPAN, check=_t_span)
    def t_span(self):
        pass

    @json_field("steps", default=DEFAULT_BVP_STEPS, check=_positive_int)
    def steps(self):
        pass

    @json_field("tolerance", default=DEFAULT_TOLERANCE, check=_positive_number)
    def tolerance(self):
        pass

    @json_field("anchor-q", check=_number_list)
    def anchor_q(self):
        pass

    @json_field("anchor-p", check=_number_list)
    def anchor_p(self):
        pass

    @json_field("starts", default=8, check=_positive_int)
    def starts(self):
        pass

    @json_field("seed", default=0, check=lambda v: None if isinstance(v, int)
                else "Expected integer for")
    def seed(self):
        pass


class Check(_Base):
    @json_field("eps", default=1e-4, check=_eps)
    def eps(self):
        pass

    @json_field("gprime", check=_matrix)
    def gprime(self):
        pass

    @json_field("n-bumps", check=_positive_int)
    def n_bumps(self):
        pass

    @json_field("tolerance", default=1e-7, check=_positive_number)
    def tolerance(self):
        pass

    @json_field("probe-start", check=_number_list)
    def probe_start(self):
        pass

    @json_field("probe-direction", check=_number_list)
    def probe_direction(self):
        pass

    @json_field("probe-samples", default=101, check=_positive_int)
    def probe_samples(self):
        pass


class Legendre(_Base):
    @json_field("samples", default=50, check=_positive_int)
    def samples(self):
        pass

    @json_field("seed", default=0, check=lambda v: None if isinstance(v, int)
                else "Expected integer for")
    def seed(self):
        pass

    @json_field("radius", default=1.0, check=_positive_number)
    def radius(self):
        pass


class ProblemFile(_Base):
    """
    A problem file: the problem definition plus optional blocks for each
    command. Everything is validated on construction.

    """
    def __init__(self, filename):
        self.filename = filename
        data = self._load_file(os.path.expanduser(filename))
        super().__init__(data, None)

    def _load_file(self, path):
        if not os.path.exists(path):
            raise ConfigError("Cannot find problem file", path, None)

        with open(path, 'r') as f:
            try:
                data = json.load(f)
            except json.JSONDecodeError as e:
                raise ConfigError(f"Invalid JSON ({e.msg} at line {e.lineno})",
                                  path, None) from None
        return data

    @property
    def _object_name(self):
        return f"problem file {self.filename}"

    @json_field("problem", mandatory=True, obj_cls=Problem)
    def problem(self):
        pass

    @json_field("ivp", obj_cls=Ivp)
    def ivp(self):
        pass

    @json_field("bvp", obj_cls=Bvp)
    def bvp(self):
        pass

    @json_field("check", default={}, obj_cls=Check)
    def check(self):
        pass

    @json_field("legendre", default={}, obj_cls=Legendre)
    def legendre(self):
        pass


def thread_count():
    """Worker threads for multi-start shooting, from VAKO_THREADS."""
    value = os.environ.get(THREADS_ENV, "1")
    try:
        count = int(value)
    except ValueError:
        raise ConfigError("Expected integer for environment variable", THREADS_ENV,
                          None) from None
    return max(1, count)
