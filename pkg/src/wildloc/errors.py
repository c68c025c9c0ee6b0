"""Exception hierarchy shared by all wildloc modules."""


class WildlocError(Exception):
    """Base class for every error raised by this package."""


class IoError(WildlocError):
    """A file is missing or unreadable."""


class DecodeError(WildlocError):
    """An image file is corrupt or not PNG/JPEG."""


class TooSmall(WildlocError):
    """Downscaling would shrink a raster below the minimum size."""


class OutOfBounds(WildlocError):
    """A descriptor patch would extend past the image border."""


class ExternalMatcherUnavailable(WildlocError):
    """The external matcher process could not be started or handshaken."""


class ExternalMatcherError(WildlocError):
    """The external matcher reported an in-band failure for a request."""


class DegenerateRect(WildlocError):
    """A georeference rectangle has zero latitude or longitude extent."""


class InvalidGeoRect(WildlocError):
    """Corner coordinates do not form a valid north-up rectangle."""


class InsufficientPairs(WildlocError):
    """Fewer than four point correspondences were supplied."""


class DegenerateConfiguration(WildlocError):
    """Correspondences are collinear or coincident; no unique homography."""


class NoModelFound(WildlocError):
    """No sampled model reached the minimum inlier count."""


class PointAtInfinity(WildlocError):
    """A projective transform mapped a point to the plane at infinity."""


class FormatError(WildlocError):
    """A CSV file has a bad header, wrong arity, or non-numeric fields."""


class MissingImage(WildlocError):
    """A catalog row references an image file that does not exist."""


class InvalidTileSpec(WildlocError):
    """Requested tile dimensions exceed the mosaic dimensions."""


class WorldTooSmall(WildlocError):
    """Synthetic world dimensions are below the 512x512 floor."""


class FootprintOutOfBounds(WildlocError):
    """A requested view extends past the synthetic world edge."""


class MissingGroundTruth(WildlocError):
    """A localized photo has no ground-truth coordinates to compare with."""
