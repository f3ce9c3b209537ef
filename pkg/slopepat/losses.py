"""
Loss and noise specifications, data terms and limiting constants
"""

from __future__ import division

from .errors import logger, UnsupportedLossError

# NumPy
try:
    import numpy as np
except:
    logger.error('NumPy must be installed')
    raise ImportError

# SciPy
try:
    from scipy import stats
    from scipy.special import huber
    from scipy.integrate import quad
    from scipy.optimize import brentq
except:
    logger.error('SciPy must be installed')
    raise ImportError


LOSS_KINDS = ('quadratic', 'huber', 'quantile')
NOISE_KINDS = ('gaussian', 'student_t', 'shifted')


class LossSpec(object):

    """
    A regression loss

    Args:
        kind (str): 'quadratic', 'huber' or 'quantile'.
        k (Optional[float]): The Huber threshold.
        alpha (Optional[float]): The quantile level.
    """

    def __init__(self, kind='quadratic', k=None, alpha=None):

        if kind not in LOSS_KINDS:

            logger.error('  The loss must be one of {}.'.format(', '.join(LOSS_KINDS)))
            raise ValueError('unknown loss kind {}'.format(kind))

        if kind == 'huber':

            if k is None or not k > 0:

                logger.error('  The Huber threshold must be positive.')
                raise ValueError('k must be positive')

            k = float(k)

        if kind == 'quantile':

            if alpha is None or not 0 < alpha < 1:

                logger.error('  The quantile level must lie in (0,1).')
                raise ValueError('alpha must lie in (0,1)')

            alpha = float(alpha)

        self.kind = kind
        self.k = k if kind == 'huber' else None
        self.alpha = alpha if kind == 'quantile' else None

    @classmethod
    def quadratic(cls):
        return cls('quadratic')

    @classmethod
    def huber(cls, k):
        return cls('huber', k=k)

    @classmethod
    def quantile(cls, alpha):
        return cls('quantile', alpha=alpha)

    def to_dict(self):

        out = {'kind': self.kind}

        if self.kind == 'huber':
            out['k'] = self.k
        elif self.kind == 'quantile':
            out['alpha'] = self.alpha

        return out

    def __eq__(self, other):
        return isinstance(other, LossSpec) and self.to_dict() == other.to_dict()

    def __ne__(self, other):
        return not self.__eq__(other)

    def __repr__(self):
        return 'LossSpec({})'.format(self.to_dict())


class NoiseSpec(object):

    """
    An error distribution

    Args:
        kind (str): 'gaussian', 'student_t' or 'shifted'.
        sigma (Optional[float]): The gaussian standard deviation.
        df (Optional[float]): The student_t degrees of freedom.
        scale (Optional[float]): The student_t scale.
        base (Optional[NoiseSpec]): The distribution a shifted noise is built on.
        shift (Optional[float]): The location shift added to `base`.
    """

    def __init__(self, kind='gaussian', sigma=1.0, df=None, scale=1.0, base=None, shift=0.0):

        if kind not in NOISE_KINDS:

            logger.error('  The noise must be one of {}.'.format(', '.join(NOISE_KINDS)))
            raise ValueError('unknown noise kind {}'.format(kind))

        self.kind = kind

        if kind == 'gaussian':

            if sigma is None or not sigma > 0:
                raise ValueError('sigma must be positive')

            self.sigma = float(sigma)

        elif kind == 'student_t':

            if df is None or not df > 0:
                raise ValueError('df must be positive')

            if scale is None or not scale > 0:
                raise ValueError('scale must be positive')

            self.df = float(df)
            self.scale = float(scale)

        else:

            if not isinstance(base, NoiseSpec):
                raise ValueError('a shifted noise needs a base NoiseSpec')

            self.base = base
            self.shift = float(shift)

    @classmethod
    def gaussian(cls, sigma):
        return cls('gaussian', sigma=sigma)

    @classmethod
    def student_t(cls, df, scale=1.0):
        return cls('student_t', df=df, scale=scale)

    @classmethod
    def shifted(cls, base, shift):
        return cls('shifted', base=base, shift=shift)

    @classmethod
    def quantile_shifted(cls, base, alpha):

        """
        Shifts `base` so that its alpha-quantile sits at zero

        The shift s solves F_base(-s) = alpha.
        """

        if not 0 < alpha < 1:
            raise ValueError('alpha must lie in (0,1)')

        def objective(s):
            return base.cdf(-s) - alpha

        width = 1.0

        while objective(-width) < 0 or objective(width) > 0:
            width *= 2.0

        return cls.shifted(base, brentq(objective, -width, width, xtol=1e-14, rtol=1e-14))

    def _frozen(self):

        if self.kind == 'gaussian':
            return stats.norm(loc=0.0, scale=self.sigma)

        return stats.t(self.df, loc=0.0, scale=self.scale)

    def cdf(self, x):

        if self.kind == 'shifted':
            return self.base.cdf(np.asarray(x) - self.shift)

        return self._frozen().cdf(x)

    def pdf(self, x):

        if self.kind == 'shifted':
            return self.base.pdf(np.asarray(x) - self.shift)

        return self._frozen().pdf(x)

    def ppf(self, q):

        if self.kind == 'shifted':
            return self.base.ppf(q) + self.shift

        return self._frozen().ppf(q)

    def mean(self):

        if self.kind == 'shifted':
            return self.base.mean() + self.shift

        if self.kind == 'student_t' and self.df <= 1:
            return np.nan

        return 0.0

    def variance(self):

        if self.kind == 'shifted':
            return self.base.variance()

        if self.kind == 'gaussian':
            return self.sigma ** 2

        if self.df <= 2:
            return np.inf

        return self.scale ** 2 * self.df / (self.df - 2.0)

    def expect(self, func):

        """E[func(eps)] by adaptive quadrature"""

        value, __ = quad(lambda x: func(x) * self.pdf(x), -np.inf, np.inf, epsabs=1e-12, epsrel=1e-10, limit=200)

        return value

    def sample(self, rng, size):

        """
        Draws i.i.d. errors

        Args:
            rng (numpy.random.Generator)
            size (int)
        """

        if self.kind == 'gaussian':
            return rng.normal(0.0, self.sigma, size)

        if self.kind == 'student_t':
            return self.scale * rng.standard_t(self.df, size)

        return self.base.sample(rng, size) + self.shift

    def to_dict(self):

        if self.kind == 'gaussian':
            return {'kind': 'gaussian', 'sigma': self.sigma}

        if self.kind == 'student_t':
            return {'kind': 'student_t', 'df': self.df, 'scale': self.scale}

        return {'kind': 'shifted', 'base': self.base.to_dict(), 'shift': self.shift}

    def __eq__(self, other):
        return isinstance(other, NoiseSpec) and self.to_dict() == other.to_dict()

    def __ne__(self, other):
        return not self.__eq__(other)

    def __repr__(self):
        return 'NoiseSpec({})'.format(self.to_dict())


class LossConstants(object):

    """
    Limiting constants: C_Delta = delta * C and C_tilde = curvature * C
    """

    def __init__(self, delta, curvature):

        self.delta = float(delta)
        self.curvature = float(curvature)

    def __iter__(self):
        return iter((self.delta, self.curvature))

    def __repr__(self):
        return 'LossConstants(delta={:g}, curvature={:g})'.format(self.delta, self.curvature)


def _finite_variance(noise, loss):

    base = noise

    while base.kind == 'shifted':
        base = base.base

    if base.kind == 'student_t' and base.df <= 2:

        logger.error('  {} loss needs student_t noise with df > 2.'.format(loss.kind))
        raise UnsupportedLossError('{} loss needs finite noise variance (df > 2)'.format(loss.kind))


def loss_constants(loss, noise, quantile_variance='conservative'):

    """
    The constants (delta, curvature) of the limiting distribution

    Args:
        loss (LossSpec)
        noise (NoiseSpec)
        quantile_variance (Optional[str]): For the quantile loss, 'conservative'
            gives delta = (1 - alpha)^2 + alpha^2 and 'exact' gives
            E[psi(eps)^2] = alpha * (1 - alpha).

    Returns:
        LossConstants
    """

    if loss.kind == 'quadratic':

        _finite_variance(noise, loss)

        if abs(noise.mean()) > 1e-10:

            logger.error('  The quadratic loss needs centered noise.')
            raise UnsupportedLossError('quadratic loss needs centered noise')

        return LossConstants(noise.variance(), 1.0)

    if loss.kind == 'huber':

        _finite_variance(noise, loss)

        k = loss.k

        if noise.kind == 'gaussian':

            z = k / noise.sigma

            truncated = noise.sigma ** 2 * ((2.0 * stats.norm.cdf(z) - 1.0) - 2.0 * z * stats.norm.pdf(z))
            tails = 2.0 * stats.norm.cdf(-z)

            return LossConstants(truncated + k ** 2 * tails, 1.0 - tails)

        if abs(noise.expect(lambda x: np.clip(x, -k, k))) > 1e-8:

            logger.error('  The Huber score is not centered under this noise.')
            raise UnsupportedLossError('huber loss needs E[psi(eps)] = 0')

        delta = noise.expect(lambda x: np.minimum(x * x, k * k))
        curvature = noise.cdf(k) - noise.cdf(-k)

        return LossConstants(delta, curvature)

    alpha = loss.alpha

    if abs(noise.cdf(0.0) - alpha) > 1e-8:

        logger.error('  The noise alpha-quantile is not at zero (F(0) = {:g}).'.format(float(noise.cdf(0.0))))
        raise UnsupportedLossError('quantile loss needs F(0) = alpha')

    density = float(noise.pdf(0.0))

    if density <= 0:
        raise UnsupportedLossError('quantile loss needs f(0) > 0')

    if quantile_variance == 'exact':
        delta = alpha * (1.0 - alpha)
    else:
        delta = (1.0 - alpha) ** 2 + alpha ** 2

    return LossConstants(delta, density)


def huber_loss(residuals, k):

    """sum_i H_k(r_i)"""

    return float(np.sum(huber(k, residuals)))


def huber_score(residuals, k):
    return np.clip(residuals, -k, k)


def check_loss(residuals, alpha):

    """sum_i |r_i|_alpha with |x|_alpha = (1 - alpha)(-x) for x <= 0, alpha * x otherwise"""

    r = np.asarray(residuals, dtype='float64')

    return float(np.sum(np.where(r > 0, alpha * r, (alpha - 1.0) * r)))


def smoothed_check_loss(residuals, alpha, mu):

    """
    The Moreau envelope of |x|_alpha at parameter mu, summed

    A tilted Huber function: quadratic x^2 / (2 mu) on [-mu (1 - alpha), mu alpha],
    linear with slopes alpha and alpha - 1 outside.
    """

    r = np.asarray(residuals, dtype='float64')

    upper = mu * alpha
    lower = -mu * (1.0 - alpha)

    values = np.where(r > upper,
                      alpha * r - mu * alpha ** 2 / 2.0,
                      np.where(r < lower,
                               (alpha - 1.0) * r - mu * (1.0 - alpha) ** 2 / 2.0,
                               r * r / (2.0 * mu)))

    return float(np.sum(values))


def smoothed_check_score(residuals, alpha, mu):

    """The derivative of the smoothed check function"""

    return np.clip(np.asarray(residuals, dtype='float64') / mu, alpha - 1.0, alpha)
