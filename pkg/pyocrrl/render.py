from __future__ import print_function, division
import os
import shlex
import shutil
import subprocess
import tempfile
import threading
from dataclasses import dataclass

from pyocrrl.errors import ConfigError, InputError
from pyocrrl.rv import RasterImage


# source file suffix written for each code format
FORMAT_SUFFIX = {"python_plot": ".py", "html": ".html", "svg": ".svg",
                 "latex_tikz": ".tex", "molecule_code": ".py"}

DEFAULT_TIMEOUT = 30.0


@dataclass
class RenderResult:
    """outcome of one renderer invocation.  image is None on failure"""
    image: RasterImage = None
    success: bool = False
    reason: str = ""


def render_via_command(code, fmt, cmd_template, workdir=None,
                       timeout=DEFAULT_TIMEOUT):
    """render generated code with an external command

    Parameters:
    ----------
        code : str
            generated code
        fmt : str
            code format, picks the input file suffix
        cmd_template : str
            command line with {input} and {output} placeholders
        workdir : str
            directory for the temporary input/output files
        timeout : float
            seconds before the command is killed
    Returns:
    -------
        RenderResult : success iff the command exits 0 and the output
            image decodes.  timeouts, nonzero exits and bad output are
            failures, not exceptions
    """
    if not cmd_template:
        raise ConfigError("render_via_command(): no renderer command " \
                          "configured for format '{0}'".format(fmt))
    if "{input}" not in cmd_template or "{output}" not in cmd_template:
        raise ConfigError("render_via_command(): command template for " \
                          "'{0}' needs {{input}} and {{output}}".format(fmt))
    tmp = tempfile.mkdtemp(prefix="render_", dir=workdir)
    try:
        in_file = os.path.join(tmp, "input" + FORMAT_SUFFIX.get(fmt, ".txt"))
        out_file = os.path.join(tmp, "output.png")
        with open(in_file, 'w', encoding="utf-8") as f:
            f.write(code)
        args = [a.replace("{input}", in_file).replace("{output}", out_file)
                for a in shlex.split(cmd_template)]
        try:
            proc = subprocess.run(args, cwd=tmp, stdout=subprocess.PIPE,
                                  stderr=subprocess.PIPE, timeout=timeout)
        except FileNotFoundError:
            raise ConfigError("render_via_command(): renderer binary not " \
                              "found: '{0}'".format(args[0]))
        except PermissionError:
            raise ConfigError("render_via_command(): renderer binary not " \
                              "executable: '{0}'".format(args[0]))
        except subprocess.TimeoutExpired:
            return RenderResult(reason="timeout after {0}s".format(timeout))
        if proc.returncode != 0:
            return RenderResult(reason="exit status {0}".
                                format(proc.returncode))
        if not os.path.exists(out_file):
            return RenderResult(reason="no output image")
        try:
            image = RasterImage.from_file(out_file)
        except InputError as e:
            return RenderResult(reason=str(e))
        return RenderResult(image=image, success=True)
    finally:
        shutil.rmtree(tmp, ignore_errors=True)


class Renderer(object):
    """renderer pool with per-format command templates.  execution rates
    are counted from the scored records, not here

    Parameters:
    ----------
        templates : dict
            format -> (timeout_seconds, command template)
        workdir : str
            parent of the temporary render directories
        max_workers : int
            cap on concurrent renderer processes

    """
    def __init__(self, templates=None, workdir=None, max_workers=2):
        self.templates = dict(templates) if templates else {}
        self.workdir = workdir
        self._sem = threading.BoundedSemaphore(max(1, int(max_workers)))

    def can_render(self, fmt):
        return fmt in self.templates

    def render(self, code, fmt):
        """RenderResult for code in format fmt"""
        if fmt not in self.templates:
            raise ConfigError("Renderer.render(): no command template for " \
                              "format '{0}'".format(fmt))
        timeout, template = self.templates[fmt]
        with self._sem:
            return render_via_command(code, fmt, template,
                                      workdir=self.workdir, timeout=timeout)
