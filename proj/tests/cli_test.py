#!/usr/bin/env python3
"""End-to-end checks of the facekey command line: exit codes, stdout/stderr
shapes, serve + HTTP sync, and byte-identical exported indexes."""
import json
import math
import os
import random
import signal
import socket
import subprocess
import sys
import tempfile
import time

BIN = sys.argv[1]
KEY = "000102030405060708090a0b0c0d0e0f101112131415161718191a1b1c1d1e1f"
N = 16
rng = random.Random(5)
failures = []


def check(cond, what):
    if not cond:
        failures.append(what)
        print("FAIL:", what, file=sys.stderr)


def base():
    px = [0.5] * (N * N)
    for _ in range(5):
        cx, cy = rng.uniform(0, N), rng.uniform(0, N)
        amp, s = rng.uniform(-0.5, 0.5), rng.uniform(1.5, 4)
        for i in range(N * N):
            dx, dy = i % N - cx, i // N - cy
            px[i] += amp * math.exp(-(dx * dx + dy * dy) / (2 * s * s))
    return px


def write_face(path, b, sigma=0.03):
    vals = [min(1.0, max(0.0, v + rng.gauss(0, sigma))) for v in b]
    vals[0], vals[1] = 0.0, 1.0
    os.makedirs(os.path.dirname(path), exist_ok=True)
    with open(path, "wb") as f:
        f.write(b"P5\n%d %d\n255\n" % (N, N) + bytes(round(v * 255) for v in vals))


def run(cfg, *args, check_rc=None):
    cmd = [BIN] + (["-c", cfg] if cfg else []) + list(args)
    p = subprocess.run(cmd, capture_output=True, text=True, timeout=60)
    if check_rc is not None and p.returncode != check_rc:
        failures.append(f"{args}: rc {p.returncode}, wanted {check_rc}\n{p.stdout}\n{p.stderr}")
        print("FAIL:", args, p.returncode, p.stderr, file=sys.stderr)
    return p


def config(root, node, port=0):
    path = os.path.join(root, node + ".cfg")
    with open(path, "w") as f:
        f.write(f"node_id = {node}\ndata_dir = {os.path.join(root, node)}\nraster_size = {N}\n"
                f"seal_key_hex = {KEY}\nlisten_addr = 127.0.0.1:{port}\n")
    return path


def free_port():
    with socket.socket() as s:
        s.bind(("127.0.0.1", 0))
        return s.getsockname()[1]


with tempfile.TemporaryDirectory(prefix="facekey-cli-") as root:
    bases = [base() for _ in range(10)]
    train = os.path.join(root, "train")
    for i, b in enumerate(bases):
        for j in range(4):
            write_face(os.path.join(train, f"id{i}", f"{j}.pgm"), b)
    faces = {}
    for i in range(10):
        faces[i] = os.path.join(root, "faces", f"f{i}.pgm")
        write_face(faces[i], bases[i])

    port = free_port()
    a, b = config(root, "a", port), config(root, "b")

    p = run(None, "state", "--bogus-flag", check_rc=2)
    check("--bogus-flag" in p.stderr or "bogus" in p.stderr, "unknown flag is named on stderr")
    run(a, "enroll", faces[0], check_rc=2)

    solo = os.path.join(root, "solo")
    write_face(os.path.join(solo, "x_1.pgm"), bases[0])
    p = run(a, "train", solo, check_rc=1)
    check(json.loads(p.stderr)["code"] == "InsufficientSamples", "one-image train reports InsufficientSamples")

    p = run(a, "identify", faces[0], check_rc=1)
    check(json.loads(p.stderr)["code"] == "ModelMissing", "identify before train reports ModelMissing")

    for cfg in (a, b):
        p = run(cfg, "train", train, check_rc=0)
        check(json.loads(p.stdout)["samples"] == 40, "train summary counts samples")

    p = run(a, "identify", faces[3], check_rc=1)
    check(p.stdout.strip() == "UNRECOGNIZED", f"empty registry identify prints UNRECOGNIZED: {p.stdout!r}")

    p = run(a, "enroll", faces[3], "--name", "Lin", "--attr", "role=ops", "--at", "2024-05-01T08:00:00Z",
            check_rc=0)
    code = p.stdout.strip()
    check(len(code) == 22 and code.startswith("FC-"), "enroll prints a code")
    p = run(a, "identify", faces[3], check_rc=0)
    check(p.stdout.split()[:2] == ["RECOGNIZED", code], f"identify prints the code: {p.stdout!r}")
    p = run(a, "enroll", faces[3], "--name", "Lin", "--at", "2024-05-01T08:00:01Z", check_rc=1)
    check(json.loads(p.stderr)["detail"] == code, "duplicate enroll names the existing code")
    p = run(a, "lookup", code, check_rc=0)
    check(json.loads(p.stdout)["identity"]["personal"]["attributes"]["role"] == "ops", "lookup shows attributes")
    run(a, "lookup", "FC-AAAAAAAAAAAAAAAA-GE", check_rc=1)

    run(a, "message", "--to", code, "--body", "sync at 9", "--category", "meeting",
        "--from", "2024-05-01T00:00:00Z", "--until", "2024-05-02T00:00:00Z", check_rc=0)
    run(a, "preferences", code, "--suppress", "meeting", check_rc=1)
    p = run(a, "alerts", "scan", code, "--at", "2024-05-01T09:00:00Z", check_rc=0)
    check("sync at 9" in p.stdout, "alert scan returns the meeting")
    run(a, "attendance", faces[3], "--station", "door", "--direction", "in", "--at", "2024-05-01T09:00:00Z",
        check_rc=0)
    run(a, "attendance", faces[5], "--station", "door", "--direction", "in", "--at", "2024-05-01T09:00:00Z",
        check_rc=1)

    p = run(b, "enroll", faces[6], "--name", "Kim", "--at", "2024-05-01T08:30:00Z", check_rc=0)
    code_b = p.stdout.strip()

    # Serve node a, sync node b against it over HTTP, then stop a with SIGTERM.
    server = subprocess.Popen([BIN, "-c", a, "serve"], stdout=subprocess.PIPE, stderr=subprocess.PIPE, text=True)
    deadline = time.time() + 10
    up = False
    while time.time() < deadline and not up:
        try:
            socket.create_connection(("127.0.0.1", port), timeout=0.2).close()
            up = True
        except OSError:
            time.sleep(0.05)
    check(up, "serve listens on the configured address")
    p = run(b, "sync", "--peer", f"http://127.0.0.1:{port}", check_rc=0)
    report = json.loads(p.stdout)
    check(report["pulled"]["applied"] == 1 and report["pushed"]["applied"] == 1, f"sync report: {report}")
    server.send_signal(signal.SIGTERM)
    try:
        rc = server.wait(timeout=10)
    except subprocess.TimeoutExpired:
        server.kill()
        rc = -1
    check(rc == 0, f"serve exits 0 on SIGTERM (got {rc})")

    ia, ib = os.path.join(root, "a.fcix"), os.path.join(root, "b.fcix")
    run(a, "export-index", ia, check_rc=0)
    run(b, "export-index", ib, check_rc=0)
    with open(ia, "rb") as fa, open(ib, "rb") as fb:
        da, db = fa.read(), fb.read()
    check(da == db, "exported indexes are byte-identical after sync")
    check(code.encode() not in da and code_b.encode() not in da, "exported index holds no code text")

    p = run(b, "identify", faces[3], check_rc=0)
    check(p.stdout.split()[1] == code, "synced node recognizes the replicated identity")
    p = run(b, "state", check_rc=0)
    check(json.loads(p.stdout)["nodeId"] == "b", "state dumps JSON")

    env = dict(os.environ, FACEKEY_CONFIG=a)
    p = subprocess.run([BIN, "lookup", code], capture_output=True, text=True, env=env)
    check(p.returncode == 0, "FACEKEY_CONFIG selects the node")

if failures:
    print(f"{len(failures)} CLI check(s) failed", file=sys.stderr)
    sys.exit(1)
print("cli: all checks passed")
