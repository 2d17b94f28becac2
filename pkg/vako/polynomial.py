"""
Sparse multivariate polynomials used by inline problem definitions.

A polynomial is written as a list of terms [coefficient, [e_1, .., e_m]]
meaning coefficient * x_1^e_1 * .. * x_m^e_m.

"""
import numpy as np

from vako.common import DimensionMismatch, as_vector


class Polynomial:
    def __init__(self, terms, nvars):
        self.nvars = int(nvars)
        coefficients = []
        exponents = []
        for term in terms:
            coefficient, powers = term
            if len(powers) != self.nvars:
                raise DimensionMismatch(
                    f"Polynomial term {term} needs {self.nvars} exponents")
            if any(int(e) != e or e < 0 for e in powers):
                raise DimensionMismatch(f"Exponents must be non-negative integers: {powers}")
            coefficients.append(float(coefficient))
            exponents.append([int(e) for e in powers])
        self.coefficients = np.array(coefficients, dtype=float)
        self.exponents = np.array(exponents, dtype=int).reshape(-1, self.nvars)

    def __repr__(self):
        return f"<Polynomial({len(self.coefficients)} terms in {self.nvars} variables)>"

    def __call__(self, x):
        x = as_vector(x, self.nvars, "polynomial argument")
        if not len(self.coefficients):
            return 0.0
        return float(self.coefficients @ np.prod(x ** self.exponents, axis=1))

    def derivative(self, j):
        keep = self.exponents[:, j] > 0
        coefficients = self.coefficients[keep] * self.exponents[keep, j]
        exponents = self.exponents[keep].copy()
        exponents[:, j] -= 1
        return Polynomial(zip(coefficients, exponents.tolist()), self.nvars)

    def gradient_polynomials(self):
        return [self.derivative(j) for j in range(self.nvars)]


class PolynomialArray:
    """
    A nested list of polynomials in the same variables, evaluated to an
    array of the nesting's shape, with its derivative array stacked on a
    trailing axis.

    """
    def __init__(self, nested, nvars):
        self.nvars = int(nvars)
        array = np.empty(_shape(nested), dtype=object)
        for index in np.ndindex(array.shape):
            array[index] = Polynomial(_pick(nested, index), nvars)
        self.polynomials = array
        self.derivatives = np.empty(array.shape + (self.nvars,), dtype=object)
        for index in np.ndindex(array.shape):
            for j, d in enumerate(array[index].gradient_polynomials()):
                self.derivatives[index + (j,)] = d

    @property
    def shape(self):
        return self.polynomials.shape

    def __call__(self, x):
        return _evaluate(self.polynomials, x)

    def jacobian(self, x):
        return _evaluate(self.derivatives, x)


def _shape(nested):
    """Shape of a nested list whose leaves are term lists."""
    if _is_term_list(nested):
        return ()
    if not isinstance(nested, list):
        raise DimensionMismatch(f"Expected a list of polynomial terms, got {nested!r}")
    inner = _shape(nested[0])
    for item in nested[1:]:
        if _shape(item) != inner:
            raise DimensionMismatch("Ragged polynomial array")
    return (len(nested),) + inner


def _is_term_list(value):
    return (isinstance(value, list) and
            (not value or all(isinstance(t, list) and len(t) == 2 and
                              isinstance(t[1], list) and
                              isinstance(t[0], (int, float)) and
                              not isinstance(t[0], bool) for t in value)))


def _pick(nested, index):
    for i in index:
        nested = nested[i]
    return nested


def _evaluate(polynomials, x):
    out = np.empty(polynomials.shape)
    for index in np.ndindex(polynomials.shape):
        out[index] = polynomials[index](x)
    return out
