"""Dataclass configs exposed as command-line flags."""
import argparse
import dataclasses
import typing


def parse(cls, argv=None):
    """Build ``cls`` from ``--field value`` flags; defaults come from the dataclass."""
    ap = argparse.ArgumentParser(description=(cls.__doc__ or "").strip())
    hints = typing.get_type_hints(cls)
    for f in dataclasses.fields(cls):
        tp = hints[f.name]
        default = f.default if f.default is not dataclasses.MISSING else f.default_factory()
        flag = "--" + f.name.replace("_", "-")
        if typing.get_origin(tp) is tuple:
            ap.add_argument(flag, type=typing.get_args(tp)[0], nargs="+", default=default)
        elif tp is bool:
            ap.add_argument(flag, action=argparse.BooleanOptionalAction, default=default)
        else:
            ap.add_argument(flag, type=tp, default=default)
    ns = ap.parse_args(argv)
    return cls(**{f.name: (tuple(v) if isinstance(v, list) else v) for f, v in
                  ((f, getattr(ns, f.name)) for f in dataclasses.fields(cls))})
