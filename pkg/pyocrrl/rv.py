from __future__ import print_function, division
import io
import re
import threading

import numpy as np
import requests
from PIL import Image

from pyocrrl.errors import ContractError, InputError, TransportError, \
    DimensionError


FORMATS = ("python_plot", "html", "svg", "latex_tikz", "molecule_code")

STUB_GRID = 8
# centered 8x8 vectors with a norm below this count as constant images
STUB_CONSTANT_TOL = 1.0e-3


class EmbeddingVector(object):
    """an L2-normalized feature vector returned by an embedding backend

    Parameters:
    ----------
        values : sequence of float
            raw values; normalized on construction
    Attributes:
    ----------
        values : read-only numpy float64 array of unit norm
        dim : int

    """
    def __init__(self, values):
        v = np.array(values, dtype=np.float64).ravel()
        if v.shape[0] == 0:
            raise ContractError("EmbeddingVector: empty vector")
        if not np.all(np.isfinite(v)):
            raise ContractError("EmbeddingVector: non-finite values")
        norm = np.linalg.norm(v)
        if norm == 0.0:
            raise ContractError("EmbeddingVector: zero vector")
        v = v / norm
        v.flags.writeable = False
        self.values = v

    @property
    def dim(self):
        return self.values.shape[0]

    def __repr__(self):
        return "EmbeddingVector(dim={0})".format(self.dim)


class VisionRewardConfig(object):
    """weights and geometry of the multi-scale visual reward

    Parameters:
    ----------
        omega_global : float
            weight of the whole-image (thumbnail) similarity
        omega_local : float
            weight of the mean patch similarity.  the two weights sum to 1
        grid_rows, grid_cols : int
            patch grid
        thumbnail_size : int
            side of the square thumbnail used for the global similarity
        format_weight : float
            share of the format-alignment reward in the combined vision
            reward; 0 gives the fidelity reward alone

    """
    def __init__(self, omega_global=0.5, omega_local=0.5, grid_rows=3,
                 grid_cols=3, thumbnail_size=224, format_weight=0.0):
        self.omega_global = float(omega_global)
        self.omega_local = float(omega_local)
        self.grid_rows = int(grid_rows)
        self.grid_cols = int(grid_cols)
        self.thumbnail_size = int(thumbnail_size)
        self.format_weight = float(format_weight)
        self.validate()

    def validate(self):
        if self.omega_global < 0.0 or self.omega_local < 0.0:
            raise ContractError("VisionRewardConfig: weights must be " \
                                "nonnegative")
        if abs(self.omega_global + self.omega_local - 1.0) > 1.0e-9:
            raise ContractError("VisionRewardConfig: omega_global + " \
                                "omega_local must be 1, not {0}".
                                format(self.omega_global + self.omega_local))
        if self.grid_rows < 1 or self.grid_cols < 1:
            raise ContractError("VisionRewardConfig: grid must be at " \
                                "least 1x1")
        if self.thumbnail_size < 1:
            raise ContractError("VisionRewardConfig: thumbnail_size must " \
                                "be positive")
        if not 0.0 <= self.format_weight <= 1.0:
            raise ContractError("VisionRewardConfig: format_weight must " \
                                "be in [0,1]")

    @property
    def n_patches(self):
        return self.grid_rows * self.grid_cols


class RasterImage(object):
    """8-bit RGB image backed by a (height, width, 3) uint8 array"""
    def __init__(self, pixels):
        arr = np.asarray(pixels)
        if arr.ndim != 3 or arr.shape[2] != 3 or arr.shape[0] < 1 or \
                arr.shape[1] < 1:
            raise ContractError("RasterImage: pixels must have shape " \
                                "(height, width, 3), not {0}".
                                format(arr.shape))
        self.pixels = np.ascontiguousarray(arr, dtype=np.uint8)

    @property
    def width(self):
        return self.pixels.shape[1]

    @property
    def height(self):
        return self.pixels.shape[0]

    @classmethod
    def from_pil(cls, image):
        return cls(np.asarray(image.convert("RGB")))

    @classmethod
    def from_bytes(cls, data, name="image"):
        try:
            with Image.open(io.BytesIO(data)) as image:
                image.load()
                return cls.from_pil(image)
        except Exception as e:
            raise InputError("RasterImage.from_bytes(): can't decode " +
                             "{0}: {1}".format(name, str(e)))

    @classmethod
    def from_file(cls, filename):
        try:
            with open(filename, "rb") as f:
                data = f.read()
        except (IOError, OSError) as e:
            raise InputError("RasterImage.from_file(): can't read " +
                             "{0}: {1}".format(filename, str(e)))
        return cls.from_bytes(data, name=filename)

    def to_pil(self):
        return Image.fromarray(self.pixels, mode="RGB")

    def to_png_bytes(self):
        buf = io.BytesIO()
        self.to_pil().save(buf, format="PNG")
        return buf.getvalue()

    def resize(self, width, height):
        """box-filtered resize"""
        if (width, height) == (self.width, self.height):
            return RasterImage(self.pixels.copy())
        return RasterImage.from_pil(self.to_pil().resize((width, height),
                                                         Image.BOX))

    def crop(self, x0, y0, x1, y1):
        return RasterImage(self.pixels[y0:y1, x0:x1, :].copy())

    def __eq__(self, other):
        if not isinstance(other, RasterImage):
            return NotImplemented
        return np.array_equal(self.pixels, other.pixels)

    def __ne__(self, other):
        result = self.__eq__(other)
        if result is NotImplemented:
            return result
        return not result

    def __repr__(self):
        return "RasterImage({0}x{1})".format(self.width, self.height)


def cosine_similarity(u, v):
    """cosine of two embedding vectors, in [-1,1]"""
    if u.dim != v.dim:
        raise ContractError("cosine_similarity(): dimension mismatch: " +
                            "{0} vs {1}".format(u.dim, v.dim))
    c = float(np.dot(u.values, v.values))
    return min(1.0, max(-1.0, c))


def _clamp01(x):
    return min(1.0, max(0.0, x))


def _grid_edges(n, parts):
    # equal parts, the remainder goes to the last part
    base = n // parts
    edges = [i * base for i in range(parts)]
    edges.append(n)
    return edges


def make_patches(img, grid_rows, grid_cols):
    """tile an image into grid_rows x grid_cols patches

    Returns:
    -------
        list of RasterImage, left-to-right then top-to-bottom.  the last
        column and the last row take the remainder pixels
    """
    if grid_rows < 1 or grid_cols < 1:
        raise ContractError("make_patches(): grid must be at least 1x1")
    if img.width < grid_cols or img.height < grid_rows:
        raise ContractError("make_patches(): {0}x{1} image smaller than " \
                            "{2}x{3} grid".format(img.width, img.height,
                                                  grid_cols, grid_rows))
    xs = _grid_edges(img.width, grid_cols)
    ys = _grid_edges(img.height, grid_rows)
    patches = []
    for r in range(grid_rows):
        for c in range(grid_cols):
            patches.append(img.crop(xs[c], ys[r], xs[c + 1], ys[r + 1]))
    return patches


def _box_average(arr, rows, cols):
    """mean over the cells of a rows x cols partition of a 2d array"""
    h, w = arr.shape
    # upsample by repetition so every cell holds at least one pixel
    if h < rows:
        arr = np.repeat(arr, -(-rows // h), axis=0)
    if w < cols:
        arr = np.repeat(arr, -(-cols // w), axis=1)
    h, w = arr.shape
    r_edges = (np.arange(rows) * h) // rows
    c_edges = (np.arange(cols) * w) // cols
    sums = np.add.reduceat(np.add.reduceat(arr, r_edges, axis=0),
                           c_edges, axis=1)
    r_counts = np.diff(np.append(r_edges, h))
    c_counts = np.diff(np.append(c_edges, w))
    return sums / np.outer(r_counts, c_counts)


def stub_constant_vector():
    """the canonical vector for constant images: all entries 1/8"""
    return EmbeddingVector(np.ones(STUB_GRID * STUB_GRID))


def stub_embed(img):
    """deterministic 64-d embedding for tests and offline runs

    luma grayscale (0.299, 0.587, 0.114), box-averaged down to 8x8,
    flattened, mean subtracted, L2-normalized.  constant images map to
    stub_constant_vector()
    """
    p = img.pixels.astype(np.float64)
    gray = 0.299 * p[:, :, 0] + 0.587 * p[:, :, 1] + 0.114 * p[:, :, 2]
    v = _box_average(gray, STUB_GRID, STUB_GRID).ravel()
    v = v - v.mean()
    if np.linalg.norm(v) < STUB_CONSTANT_TOL:
        return stub_constant_vector()
    return EmbeddingVector(v)


class StubBackend(object):
    """in-process backend around stub_embed"""
    name = "stub"
    dim = STUB_GRID * STUB_GRID

    def health(self):
        return self.dim

    def embed(self, img):
        return stub_embed(img)


class RemoteBackend(object):
    """client for an embedding service

    Parameters:
    ----------
        endpoint : str
            base url; images are POSTed to <endpoint>/embed as PNG and the
            health check is GET <endpoint>/health
        timeout : float
            seconds per request
        retries : int
            extra attempts after the first failure
        max_in_flight : int
            cap on concurrent requests from this client
        session : requests.Session
            optional, for connection reuse (and for tests)
    Note:
    ----
        the service answers {"dim": n, "values": [...]} for /embed and
        {"dim": n} for /health.  once health() has run, every vector must
        have the advertised dimension
    """
    name = "remote"

    def __init__(self, endpoint, timeout=30.0, retries=2, max_in_flight=4,
                 session=None):
        if not endpoint:
            raise ContractError("RemoteBackend: endpoint required")
        self.endpoint = endpoint.rstrip('/')
        self.timeout = float(timeout)
        self.retries = int(retries)
        self.session = session if session is not None else requests.Session()
        self._sem = threading.BoundedSemaphore(max(1, int(max_in_flight)))
        self.dim = None

    def _request(self, method, path, **kwargs):
        url = self.endpoint + path
        attempts = 0
        last = None
        while attempts <= self.retries:
            attempts += 1
            try:
                with self._sem:
                    resp = self.session.request(method, url,
                                                timeout=self.timeout,
                                                **kwargs)
                if resp.status_code != 200:
                    last = "status {0}".format(resp.status_code)
                    continue
                return resp.json(), attempts
            except requests.RequestException as e:
                last = str(e)
            except ValueError as e:
                last = "invalid json: " + str(e)
        raise TransportError("RemoteBackend: {0} {1} failed after {2} " \
                             "attempt(s): {3}".format(method, url, attempts,
                                                      last),
                             attempts=attempts)

    def health(self):
        """check the service and record its advertised dimension"""
        obj, attempts = self._request("GET", "/health")
        try:
            dim = int(obj["dim"])
        except (KeyError, TypeError, ValueError):
            raise TransportError("RemoteBackend.health(): response has no " \
                                 "integer 'dim'", attempts=attempts)
        if dim < 1:
            raise TransportError("RemoteBackend.health(): advertised dim " \
                                 "must be positive, not {0}".format(dim),
                                 attempts=attempts)
        self.dim = dim
        return dim

    def embed(self, img):
        obj, attempts = self._request("POST", "/embed",
                                      data=img.to_png_bytes(),
                                      headers={"Content-Type": "image/png"})
        try:
            dim = int(obj["dim"])
            values = [float(x) for x in obj["values"]]
        except (KeyError, TypeError, ValueError):
            raise TransportError("RemoteBackend.embed(): malformed " \
                                 "response", attempts=attempts)
        expected = self.dim if self.dim is not None else dim
        if len(values) != expected or dim != expected:
            actual = len(values) if len(values) != expected else dim
            raise DimensionError("RemoteBackend.embed(): expected dim " \
                                 "{0}, got {1}".format(expected, actual),
                                 expected=expected, actual=actual,
                                 attempts=attempts)
        try:
            return EmbeddingVector(values)
        except ContractError as e:
            raise TransportError("RemoteBackend.embed(): " + str(e),
                                 attempts=attempts)


def remote_embed(img, endpoint, timeout=30.0, retries=2):
    """embed one image through a RemoteBackend"""
    return RemoteBackend(endpoint, timeout=timeout, retries=retries).embed(img)


def multiscale_vision_reward(pred_img, gt_img, cfg=None, backend=None):
    """multi-scale visual fidelity reward

    Parameters:
    ----------
        pred_img : RasterImage
            rendering of the prediction
        gt_img : RasterImage
            ground truth image
        cfg : VisionRewardConfig
        backend : object with an embed(RasterImage) method.
            defaults to StubBackend
    Returns:
    -------
        float in [0,1] : omega_global * s_global + omega_local * mean(s_local)
    Note:
    ----
        every cosine is clamped to [0,1] before weighting
    """
    if cfg is None:
        cfg = VisionRewardConfig()
    if backend is None:
        backend = StubBackend()
    return vision_similarities(pred_img, gt_img, cfg, backend)[0]


def vision_similarities(pred_img, gt_img, cfg, backend):
    """(reward, s_global, list of s_local) for multiscale_vision_reward"""
    t = cfg.thumbnail_size
    s_global = _clamp01(cosine_similarity(backend.embed(pred_img.resize(t, t)),
                                          backend.embed(gt_img.resize(t, t))))
    s_local = []
    for p, g in zip(make_patches(pred_img, cfg.grid_rows, cfg.grid_cols),
                    make_patches(gt_img, cfg.grid_rows, cfg.grid_cols)):
        s_local.append(_clamp01(cosine_similarity(backend.embed(p),
                                                  backend.embed(g))))
    reward = cfg.omega_global * s_global + \
             cfg.omega_local * (sum(s_local) / len(s_local))
    return _clamp01(reward), s_global, s_local


# format signatures, tested in this order
_XML_PREAMBLE = re.compile(r"^(\s*(<\?xml[^>]*\?>|<!--.*?-->|<!DOCTYPE[^>]*>))*"
                           r"\s*<svg[\s>/]", re.IGNORECASE | re.DOTALL)
_HTML_ROOT = re.compile(r"<html[\s>]|<!DOCTYPE\s+html", re.IGNORECASE)
_HTML_TAG = re.compile(r"<\s*([a-zA-Z][a-zA-Z0-9]*)[\s>/]")
HTML_STRUCTURAL_TAGS = {"head", "body", "div", "p", "span", "table", "ul",
                        "ol", "li", "section", "article", "header", "footer",
                        "nav", "main", "form", "h1", "h2", "h3", "h4", "h5",
                        "h6"}
_TIKZ = re.compile(r"\\begin\s*\{tikzpicture\}|\\documentclass")
_PLOT_IMPORT = re.compile(r"^\s*(import|from)\s+(matplotlib|seaborn|plotly|"
                          r"bokeh|altair)\b", re.MULTILINE)
_PLOT_CALL = re.compile(r"\b(plt|sns|px|go|alt)\.\w+\s*\(|"
                        r"\.(plot|bar|barh|scatter|hist|pie|imshow|savefig|"
                        r"show|line|area)\s*\(")
_MOLECULE = re.compile(r"\b(from|import)\s+rdkit\b|Chem\.MolFromSmiles|"
                       r"\bindigo\b|\bopenbabel\b|\bpybel\b|\\chemfig")


def _looks_like_html(code):
    if _HTML_ROOT.search(code):
        return True
    tags = set(t.lower() for t in _HTML_TAG.findall(code))
    return len(tags & HTML_STRUCTURAL_TAGS) >= 2


def detect_format(code):
    """classify generated code by signature heuristics

    Returns:
    -------
        one of FORMATS, or None when nothing matches.  first match wins in
        the order svg, html, latex_tikz, python_plot, molecule_code
    """
    if code is None:
        return None
    if _XML_PREAMBLE.match(code):
        return "svg"
    if _looks_like_html(code):
        return "html"
    if _TIKZ.search(code):
        return "latex_tikz"
    if _PLOT_IMPORT.search(code) and _PLOT_CALL.search(code):
        return "python_plot"
    if _MOLECULE.search(code):
        return "molecule_code"
    return None


def format_alignment_reward(code, expected):
    """1.0 if detect_format(code) is expected, else 0.0"""
    if expected not in FORMATS:
        raise ContractError("format_alignment_reward(): unknown format " +
                            "'{0}'".format(expected))
    return 1.0 if detect_format(code) == expected else 0.0


def combine_vision_reward(fidelity, format_score, format_weight=0.0):
    """(1 - format_weight) * fidelity + format_weight * format_score"""
    if not 0.0 <= format_weight <= 1.0:
        raise ContractError("combine_vision_reward(): format_weight must be " \
                            "in [0,1]")
    return (1.0 - format_weight) * fidelity + format_weight * format_score
