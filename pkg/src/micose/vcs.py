"""Revision sources: a git working copy (driven through the ``git`` CLI) or snapshot directories.

Snapshot directories come in two layouts. Flat: version files such as
``v001.st, v002.st`` that are successive versions of one logical file. Nested:
one subdirectory per revision (``v001/, v002/``) holding a whole source tree.
Either way, names sort lexicographically into chronological order.
"""
from __future__ import annotations

import fnmatch
import os
import stat
import subprocess
from dataclasses import dataclass
from datetime import datetime, timezone
from typing import List, Optional, Tuple

from micose.errors import AdapterError, NotFoundError, SourceEncodingError

VCS_CLI, SNAPSHOT_DIR = "vcs-cli", "snapshot-dir"

_RS, _US = "\x1e", "\x1f"
_LOG_FORMAT = f"{_RS}%H{_US}%P{_US}%aI{_US}%an{_US}%B{_US}"


@dataclass(frozen=True)
class RevisionInfo:
    id: str
    timestamp: str
    author: str = ""
    message: str = ""
    changed_files: Tuple[str, ...] = ()
    parent: Optional[str] = None


def decode_source(data: bytes, path: str = "") -> Tuple[str, bool]:
    """Decode ST source bytes; returns (text, used_fallback).

    UTF-8 first (BOM stripped), then Windows-1252, which many PLC IDEs write.
    Bytes containing NUL are treated as binary and rejected.
    """
    if b"\x00" in data:
        raise SourceEncodingError(f"{path or 'source'}: binary content, not Structured Text")
    try:
        return data.decode("utf-8-sig"), False
    except UnicodeDecodeError:
        pass
    try:
        return data.decode("cp1252"), True
    except UnicodeDecodeError:
        raise SourceEncodingError(f"{path or 'source'}: neither UTF-8 nor Windows-1252") from None


def _matches(path: str, pattern: str) -> bool:
    return fnmatch.fnmatch(path, pattern) or fnmatch.fnmatch(os.path.basename(path), pattern)


class GitSource:
    kind = VCS_CLI

    def __init__(self, root: str, file_pattern: str = "*.st", executable: str = "git"):
        if not os.path.isdir(root):
            raise AdapterError(f"repository root does not exist: {root}")
        self.root = root
        self.file_pattern = file_pattern
        self.executable = executable

    def _run(self, *args: str, check: bool = True) -> subprocess.CompletedProcess:
        cmd = [self.executable, "-c", "core.quotepath=off", *args]
        try:
            proc = subprocess.run(cmd, cwd=self.root, capture_output=True)
        except FileNotFoundError:
            raise AdapterError(f"version-control client {self.executable!r} not found on PATH") from None
        if check and proc.returncode != 0:
            raise AdapterError(f"{' '.join(cmd[3:5])} exited with status {proc.returncode}",
                               proc.stderr.decode("utf-8", "replace").strip())
        return proc

    def _parse_log(self, out: str) -> List[RevisionInfo]:
        revs = []
        for chunk in out.split(_RS)[1:]:
            sha, parents, ts, author, message, files = chunk.split(_US, 5)
            changed = tuple(f for f in files.strip().splitlines()
                            if f and _matches(f, self.file_pattern))
            first_parent = parents.split()[0] if parents.strip() else None
            revs.append(RevisionInfo(sha, ts, author, message.strip(), changed, first_parent))
        return revs

    def list_revisions(self, path: Optional[str] = None) -> List[RevisionInfo]:
        """Oldest-first revisions touching ``path`` (or any file matching the pattern)."""
        if self._run("rev-parse", "--verify", "-q", "HEAD", check=False).returncode != 0:
            return []       # no commits yet
        args = ["log", "--reverse", "--first-parent", "-m", "--no-renames", "--diff-filter=d",
                "--name-only", f"--format={_LOG_FORMAT}", "HEAD"]
        if path:
            args += ["--", path]
        revs = self._parse_log(self._run(*args).stdout.decode("utf-8", "replace"))
        return [r for r in revs if r.changed_files]

    def resolve(self, revision: str) -> str:
        proc = self._run("rev-parse", "--verify", "-q", f"{revision}^{{commit}}", check=False)
        if proc.returncode != 0:
            raise NotFoundError(f"unknown revision {revision!r}")
        return proc.stdout.decode().strip()

    def revision(self, revision: str) -> RevisionInfo:
        sha = self.resolve(revision)
        out = self._run("log", "-1", "--first-parent", "-m", "--no-renames", "--diff-filter=d",
                        "--name-only", f"--format={_LOG_FORMAT}", sha).stdout.decode("utf-8", "replace")
        revs = self._parse_log(out)
        if revs:
            return revs[0]
        # commit without any surviving file changes
        meta = self._run("log", "-1", f"--format={_LOG_FORMAT}", sha).stdout.decode("utf-8", "replace")
        base = self._parse_log(meta)[0]
        return RevisionInfo(base.id, base.timestamp, base.author, base.message, (), base.parent)

    def read_bytes(self, path: str, revision: str) -> bytes:
        sha = self.resolve(revision)
        proc = self._run("cat-file", "blob", f"{sha}:{path}", check=False)
        if proc.returncode != 0:
            raise NotFoundError(f"{path} does not exist at revision {revision}")
        return proc.stdout

    def read_version(self, path: str, revision: str) -> str:
        return decode_source(self.read_bytes(path, revision), path)[0]

    def previous_bytes(self, path: str, info: RevisionInfo) -> Optional[bytes]:
        if info.parent is None:
            return None
        try:
            return self.read_bytes(path, info.parent)
        except NotFoundError:
            return None

    def list_files(self, revision: str) -> List[str]:
        out = self._run("ls-tree", "-r", "--name-only", self.resolve(revision)).stdout.decode("utf-8", "replace")
        return [p for p in out.splitlines() if _matches(p, self.file_pattern)]


class SnapshotSource:
    kind = SNAPSHOT_DIR

    def __init__(self, root: str, file_pattern: str = "*.st"):
        if not os.path.isdir(root):
            raise AdapterError(f"snapshot root does not exist: {root}")
        self.root = root
        self.file_pattern = file_pattern
        entries = sorted(os.listdir(root))
        self._dirs = [e for e in entries if os.path.isdir(os.path.join(root, e))]
        self._files = [e for e in entries if os.path.isfile(os.path.join(root, e))
                       and fnmatch.fnmatch(e, file_pattern)]
        self.nested = bool(self._dirs)
        # flat layout: all version files are one logical file named after the root
        self.logical_path = os.path.basename(os.path.abspath(root)) + os.path.splitext(
            self._files[0])[1] if self._files else os.path.basename(os.path.abspath(root))

    def _rev_ids(self) -> List[str]:
        if self.nested:
            return list(self._dirs)
        return [os.path.splitext(f)[0] for f in self._files]

    def _location(self, path: str, revision: str) -> str:
        if self.nested:
            return os.path.join(self.root, revision, path)
        for f in self._files:
            if os.path.splitext(f)[0] == revision and path in (self.logical_path, f):
                return os.path.join(self.root, f)
        raise NotFoundError(f"{path} does not exist at revision {revision}")

    def _tree(self, revision: str) -> List[str]:
        if not self.nested:
            return [self.logical_path]
        base = os.path.join(self.root, revision)
        out = []
        for dirpath, _, files in os.walk(base):
            for f in files:
                rel = os.path.relpath(os.path.join(dirpath, f), base).replace(os.sep, "/")
                if _matches(rel, self.file_pattern):
                    out.append(rel)
        return sorted(out)

    def _info(self, idx: int, ids: List[str]) -> RevisionInfo:
        rev = ids[idx]
        parent = ids[idx - 1] if idx else None
        files = []
        for p in self._tree(rev):
            new = self.read_bytes(p, rev)
            old = self.previous_bytes(p, RevisionInfo(rev, "", parent=parent))
            if old != new:
                files.append(p)
        loc = os.path.join(self.root, rev) if self.nested else self._location(self.logical_path, rev)
        ts = datetime.fromtimestamp(os.stat(loc).st_mtime, timezone.utc).isoformat()
        return RevisionInfo(rev, ts, "", "", tuple(files), parent)

    def list_revisions(self, path: Optional[str] = None) -> List[RevisionInfo]:
        ids = self._rev_ids()
        revs = [self._info(i, ids) for i in range(len(ids))]
        if path:
            revs = [r for r in revs if path in r.changed_files]
        return [r for r in revs if r.changed_files]

    def resolve(self, revision: str) -> str:
        if revision not in self._rev_ids():
            raise NotFoundError(f"unknown revision {revision!r}")
        return revision

    def revision(self, revision: str) -> RevisionInfo:
        ids = self._rev_ids()
        return self._info(ids.index(self.resolve(revision)), ids)

    def read_bytes(self, path: str, revision: str) -> bytes:
        loc = self._location(path, self.resolve(revision))
        try:
            with open(loc, "rb") as fh:
                return fh.read()
        except (FileNotFoundError, IsADirectoryError):
            raise NotFoundError(f"{path} does not exist at revision {revision}") from None

    def read_version(self, path: str, revision: str) -> str:
        return decode_source(self.read_bytes(path, revision), path)[0]

    def previous_bytes(self, path: str, info: RevisionInfo) -> Optional[bytes]:
        if info.parent is None:
            return None
        try:
            return self.read_bytes(path, info.parent)
        except NotFoundError:
            return None

    def list_files(self, revision: str) -> List[str]:
        return self._tree(self.resolve(revision))


def open_source(root: str, file_pattern: str = "*.st"):
    """Git source when ``root`` is inside a git work tree, snapshot source otherwise."""
    if os.path.exists(os.path.join(root, ".git")):
        return GitSource(root, file_pattern)
    return SnapshotSource(root, file_pattern)


def list_revisions(source, path: Optional[str] = None) -> List[RevisionInfo]:
    return source.list_revisions(path)


def read_version(source, path: str, revision: str) -> str:
    return source.read_version(path, revision)


HOOK_TEMPLATE = """#!/bin/sh
# installed by micose: score every commit, informational by default
{command} hook --rev HEAD || true
"""


def install_hook(repo_root: str, command: str = "micose", gate: bool = False) -> str:
    """Write a post-commit hook; with ``gate`` a red result fails the hook visibly."""
    hooks = os.path.join(repo_root, ".git", "hooks")
    if not os.path.isdir(hooks):
        raise AdapterError(f"{repo_root} is not a git work tree root")
    path = os.path.join(hooks, "post-commit")
    body = HOOK_TEMPLATE.format(command=command)
    if gate:
        body = body.replace(" || true", " --fail-on-red")
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(body)
    os.chmod(path, os.stat(path).st_mode | stat.S_IXUSR | stat.S_IXGRP | stat.S_IXOTH)
    return path
