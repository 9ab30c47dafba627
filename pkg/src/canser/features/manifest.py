"""Dataset manifests: one ``id<TAB>audio<TAB>alignment<TAB>label`` record per line."""

import os
from dataclasses import dataclass

from ..errors import ParseError


@dataclass(frozen=True)
class ManifestEntry:
    utt_id: str
    audio: str
    alignment: str
    label: str


def read_manifest(path):
    """Entries with audio/alignment paths resolved against the manifest's directory."""
    base = os.path.dirname(os.path.abspath(os.fspath(path)))
    entries = []
    with open(path, encoding="utf-8") as fh:
        for number, raw in enumerate(fh, start=1):
            line = raw.rstrip("\n")
            if not line.strip() or line.startswith("#"):
                continue
            fields = line.split("\t")
            if len(fields) != 4:
                raise ParseError(f"expected 4 tab-separated fields, got {len(fields)}", number)
            utt_id, audio, alignment, label = (f.strip() for f in fields)
            entries.append(
                ManifestEntry(
                    utt_id,
                    os.path.normpath(os.path.join(base, audio)),
                    os.path.normpath(os.path.join(base, alignment)),
                    label,
                )
            )
    ids = [e.utt_id for e in entries]
    if len(set(ids)) != len(ids):
        raise ParseError(f"{path}: duplicate utterance ids")
    return entries


def write_manifest(path, entries):
    """Write entries, storing paths relative to the manifest's directory."""
    base = os.path.dirname(os.path.abspath(os.fspath(path)))
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for e in entries:
            audio = os.path.relpath(os.path.abspath(e.audio), base)
            alignment = os.path.relpath(os.path.abspath(e.alignment), base)
            fh.write(f"{e.utt_id}\t{audio}\t{alignment}\t{e.label}\n")
