from __future__ import print_function, division
import os

import pandas as pd

from pyocrrl.errors import ConfigError, ContractError
from pyocrrl.rv import VisionRewardConfig, FORMATS


# section name type default
RUN_DEFAULT_LINES = """run dataset_path str none
run output_path str none
run workers int 1
run log_file str none
vision backend str stub
vision endpoint str none
vision timeout float 30.0
vision retries int 2
vision max_in_flight int 4
vision omega_global float 0.5
vision omega_local float 0.5
vision grid_rows int 3
vision grid_cols int 3
vision thumbnail_size int 224
vision format_weight float 0.0
vision render_workers int 2
grpo target str ab
grpo group_size int 8
grpo epsilon float 0.2
grpo sigma_guard float 1.0e-8
grpo reward_bins int 10
grpo entropy_threshold float 0.3
grpo step_size float 0.2
grpo iterations int 300
grpo seed int 7
grpo inner_steps int 1""".split('\n')

SECTIONS = ("run", "vision", "renderers", "grpo")
PATH_VARIABLES = ("dataset_path", "output_path", "log_file")
BACKENDS = ("stub", "remote")

# environment variable -> config variable
ENV_OVERRIDES = {"OCRRL_ENDPOINT": "endpoint", "OCRRL_WORKERS": "workers"}

_TYPES = {"int": int, "float": float, "str": str}


class RunConfig(object):
    """typed run configuration backed by a pandas DataFrame

    variables are read and set as attributes; values are cast to the
    declared type on assignment.  "none" (any case) unsets a str variable

    Parameters:
    ----------
        filename : str
            optional reward control file to load

    Note:
    ----
        file format::

            # comment
            * run
            dataset_path records.jsonl
            * renderers
            svg 20 rsvg-convert {input} -o {output}

        precedence is defaults < file < environment < set()
    """
    def __init__(self, filename=None):
        super(RunConfig, self).__setattr__("_df", self.get_dataframe())
        super(RunConfig, self).__setattr__("renderers", {})
        super(RunConfig, self).__setattr__("base_dir", os.getcwd())
        super(RunConfig, self).__setattr__("filename", filename)
        if filename is not None:
            self.load(filename)

    def __setattr__(self, key, value):
        if key in ("renderers", "base_dir", "filename", "_df"):
            super(RunConfig, self).__setattr__(key, value)
            return
        self.set(key, value)

    def __getattr__(self, item):
        if item.startswith("__"):
            raise AttributeError(item)
        df = self.__dict__["_df"]
        if item not in df.index:
            raise AttributeError("RunConfig: '{0}' not found in variables".
                                 format(item))
        return df.loc[item, "value"]

    @staticmethod
    def get_dataframe():
        """the default variable table"""
        names, sections, types, values = [], [], [], []
        for line in RUN_DEFAULT_LINES:
            section, name, t, default = line.split()
            names.append(name)
            sections.append(section)
            types.append(t)
            values.append(RunConfig._cast(name, t, default))
        df = pd.DataFrame({"name": names, "section": sections,
                           "type": types, "value": values},
                          columns=["name", "section", "type", "value"])
        df.index = list(names)
        df["value"] = df["value"].astype(object)
        return df

    @staticmethod
    def _cast(name, t, raw):
        if isinstance(raw, str) and raw.strip().lower() == "none":
            if t != "str":
                raise ConfigError("RunConfig: '{0}' can't be none".
                                  format(name))
            return None
        if raw is None:
            if t != "str":
                raise ConfigError("RunConfig: '{0}' can't be none".
                                  format(name))
            return None
        try:
            return _TYPES[t](raw.strip() if isinstance(raw, str) else raw)
        except (TypeError, ValueError):
            raise ConfigError("RunConfig: can't cast '{0}' to {1} for " \
                              "'{2}'".format(raw, t, name))

    def set(self, name, value):
        if name not in self._df.index:
            raise ConfigError("RunConfig: unknown variable '{0}'".format(name))
        self._df.at[name, "value"] = self._cast(name,
                                                self._df.loc[name, "type"],
                                                value)

    def load(self, filename):
        """read a reward control file

        Parameters:
        ----------
            filename : str
        Returns:
        -------
            None
        """
        if not os.path.exists(filename):
            raise ConfigError("RunConfig.load(): config file not found: " +
                              str(filename))
        self.filename = filename
        self.base_dir = os.path.dirname(os.path.abspath(filename))
        section = None
        with open(filename, 'r', encoding="utf-8") as f:
            for iline, line in enumerate(f, start=1):
                line = line.strip()
                if len(line) == 0 or line.startswith('#'):
                    continue
                if line.startswith('*'):
                    section = line[1:].strip().lower()
                    if section not in SECTIONS:
                        raise ConfigError("RunConfig.load(): unknown " \
                                          "section '{0}' on line {1}".
                                          format(section, iline))
                    continue
                if section is None:
                    raise ConfigError("RunConfig.load(): line {0} is " \
                                      "outside any section".format(iline))
                raw = line.split(None, 1)
                if section == "renderers":
                    self._load_renderer(raw, iline)
                    continue
                name = raw[0].lower()
                if name not in self._df.index or \
                        self._df.loc[name, "section"] != section:
                    raise ConfigError("RunConfig.load(): unknown variable " \
                                      "'{0}' in section '{1}' on line {2}".
                                      format(name, section, iline))
                if len(raw) < 2:
                    raise ConfigError("RunConfig.load(): no value for " \
                                      "'{0}' on line {1}".format(name, iline))
                self.set(name, raw[1])

    def _load_renderer(self, raw, iline):
        fmt = raw[0].lower()
        if fmt not in FORMATS:
            raise ConfigError("RunConfig.load(): unknown renderer format " \
                              "'{0}' on line {1}".format(fmt, iline))
        rest = raw[1].split(None, 1) if len(raw) > 1 else []
        if len(rest) < 2:
            raise ConfigError("RunConfig.load(): renderer line {0} needs " \
                              "'format timeout command'".format(iline))
        try:
            timeout = float(rest[0])
        except ValueError:
            raise ConfigError("RunConfig.load(): bad renderer timeout " \
                              "'{0}' on line {1}".format(rest[0], iline))
        self.renderers[fmt] = (timeout, rest[1].strip())

    def apply_env(self, environ=None):
        """override variables from OCRRL_* environment variables"""
        if environ is None:
            environ = os.environ
        for env, name in ENV_OVERRIDES.items():
            if env in environ and len(environ[env].strip()) > 0:
                self.set(name, environ[env])

    def resolve_path(self, name):
        """a path variable, absolute, relative ones against base_dir"""
        if name not in PATH_VARIABLES:
            raise ConfigError("RunConfig.resolve_path(): '{0}' is not a " \
                              "path variable".format(name))
        value = getattr(self, name)
        if value is None:
            return None
        return os.path.normpath(os.path.join(self.base_dir, value))

    @property
    def vision_config(self):
        try:
            return VisionRewardConfig(omega_global=self.omega_global,
                                      omega_local=self.omega_local,
                                      grid_rows=self.grid_rows,
                                      grid_cols=self.grid_cols,
                                      thumbnail_size=self.thumbnail_size,
                                      format_weight=self.format_weight)
        except ContractError as e:
            raise ConfigError("RunConfig: " + str(e))

    def validate(self, require_dataset=True, require_output=True):
        """check ranges, the vision weights and the referenced paths"""
        self.vision_config
        if self.workers < 1 or self.render_workers < 1 or \
                self.max_in_flight < 1:
            raise ConfigError("RunConfig.validate(): worker counts must " \
                              "be >= 1")
        if self.backend not in BACKENDS:
            raise ConfigError("RunConfig.validate(): backend must be one " \
                              "of {0}, not '{1}'".format(BACKENDS,
                                                         self.backend))
        if self.backend == "remote" and not self.endpoint:
            raise ConfigError("RunConfig.validate(): remote backend needs " \
                              "an endpoint")
        if self.timeout <= 0.0 or self.retries < 0:
            raise ConfigError("RunConfig.validate(): timeout must be > 0 " \
                              "and retries >= 0")
        if self.group_size < 2:
            raise ConfigError("RunConfig.validate(): group_size must be >= 2")
        if not 0.0 < self.epsilon < 1.0:
            raise ConfigError("RunConfig.validate(): epsilon must be in (0,1)")
        if self.sigma_guard <= 0.0:
            raise ConfigError("RunConfig.validate(): sigma_guard must be > 0")
        if self.reward_bins < 1:
            raise ConfigError("RunConfig.validate(): reward_bins must be >= 1")
        if not 0.0 <= self.entropy_threshold <= 1.0:
            raise ConfigError("RunConfig.validate(): entropy_threshold must " \
                              "be in [0,1]")
        if self.iterations < 0 or self.inner_steps < 1 or \
                self.step_size < 0.0:
            raise ConfigError("RunConfig.validate(): iterations, step_size " \
                              "and inner_steps out of range")
        for fmt, (timeout, template) in self.renderers.items():
            if timeout <= 0.0:
                raise ConfigError("RunConfig.validate(): renderer '{0}' " \
                                  "timeout must be > 0".format(fmt))
            if "{input}" not in template or "{output}" not in template:
                raise ConfigError("RunConfig.validate(): renderer '{0}' " \
                                  "needs {{input}} and {{output}}".format(fmt))
        if require_dataset:
            path = self.resolve_path("dataset_path")
            if path is None or not os.path.exists(path):
                raise ConfigError("RunConfig.validate(): dataset_path not " \
                                  "found: {0}".format(path))
        if require_output:
            path = self.resolve_path("output_path")
            if path is None:
                raise ConfigError("RunConfig.validate(): output_path not set")
            out_dir = os.path.dirname(path)
            if out_dir and not os.path.isdir(out_dir):
                raise ConfigError("RunConfig.validate(): output directory " \
                                  "not found: {0}".format(out_dir))

    def summary(self):
        """DataFrame of section, name and value, renderers included"""
        df = self._df.loc[:, ["section", "name", "value"]].copy()
        rows = [{"section": "renderers", "name": fmt,
                 "value": "{0} {1}".format(t, tpl)}
                for fmt, (t, tpl) in sorted(self.renderers.items())]
        if len(rows) > 0:
            df = pd.concat([df, pd.DataFrame(rows)], ignore_index=True)
        return df.reset_index(drop=True)
