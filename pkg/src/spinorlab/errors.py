"""Exception types shared across the package."""


class SpinorLabError(Exception):
    """Base class for numerical failures raised by this package."""

    kind = "error"

    def to_dict(self):
        return {"kind": self.kind, "message": str(self)}


class NonzeroMeanError(SpinorLabError):
    kind = "nonzero_mean"

    def __init__(self, mean, tol=None):
        self.mean = mean
        self.tol = tol
        super().__init__(f"integrand mean {abs(mean):.3e} exceeds tolerance {tol:.3e}"
                         if tol is not None else f"integrand mean {abs(mean):.3e}")

    def to_dict(self):
        d = super().to_dict()
        d["mean_abs"] = float(abs(self.mean))
        return d


class BlowupError(SpinorLabError):
    kind = "blowup"

    def __init__(self, t, max_abs):
        self.t = t
        self.max_abs = max_abs
        super().__init__(f"state magnitude {max_abs:.3e} at t={t:.6g}")

    def to_dict(self):
        d = super().to_dict()
        d.update(t=float(self.t), max_abs=float(self.max_abs))
        return d


class ResolutionError(SpinorLabError):
    kind = "resolution"

    def __init__(self, t, tail_ratio):
        self.t = t
        self.tail_ratio = tail_ratio
        super().__init__(f"spectral tail ratio {tail_ratio:.3e} at t={t:.6g}")

    def to_dict(self):
        d = super().to_dict()
        d.update(t=float(self.t), tail_ratio=float(self.tail_ratio))
        return d


class FrameDegeneracyError(SpinorLabError):
    kind = "frame_degeneracy"


class TagMismatchError(ValueError):
    pass
