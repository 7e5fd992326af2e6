"""Exception and warning types raised across the package."""


class FormationError(Exception):
    """Base class for all package errors."""


class GraphError(FormationError, ValueError):
    pass


class NonUnitBearing(FormationError, ValueError):
    pass


class MissingBearing(FormationError, KeyError):
    def __init__(self, edge):
        self.edge = edge
        super().__init__(f"no bearing supplied for edge {edge}")

    def __str__(self):
        return self.args[0]


class NotLocalizable(FormationError):
    pass


class NotHurwitz(FormationError):
    pass


class NotDetectable(FormationError):
    pass


class NoConvergence(FormationError):
    def __init__(self, message, iterations=None, residual=None):
        self.iterations = iterations
        self.residual = residual
        super().__init__(message)


class NonPDInertia(FormationError):
    pass


class NumericalBlowup(FormationError):
    def __init__(self, t, component, value):
        self.t = t
        self.component = component
        self.value = value
        super().__init__(f"numerical blowup at t={t:.6g} in {component} (value {value!r})")


class CertificateFailure(FormationError):
    def __init__(self, failed):
        self.failed = list(failed)
        super().__init__("certificate checks failed: " + ", ".join(self.failed))


class CertificatePrereqFailure(FormationError):
    def __init__(self, prerequisite, detail=""):
        self.prerequisite = prerequisite
        msg = f"safety certificate prerequisite failed: {prerequisite}"
        if detail:
            msg += f" ({detail})"
        super().__init__(msg)


class ParseError(FormationError, ValueError):
    def __init__(self, message, field=None, line=None):
        self.field = field
        self.line = line
        where = []
        if line is not None:
            where.append(f"line {line}")
        if field is not None:
            where.append(f"field '{field}'")
        prefix = (", ".join(where) + ": ") if where else ""
        super().__init__(prefix + message)


class GainTooSmall(UserWarning):
    """Observer coupling gain violates 2 * lambda_min(L_ff) * gamma > 1."""
