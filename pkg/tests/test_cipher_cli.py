import io
import json
import random

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from trident.cipher import (HEADER_SIZE, MAGIC, CipherHeader, decrypt, decrypt_stream, encrypt,
                            encrypt_stream)
from trident.cli import EXIT_DATA, EXIT_KEY, EXIT_OK, EXIT_USAGE, main
from trident.errors import BadHeader, KeyMismatch
from trident.generator import RawKeyBlob, key_schedule, keystream_bytes


def make_key(seed=0, n=64, s=None):
    rng = random.Random(seed)
    return key_schedule(RawKeyBlob.random(rng, n), s=s)


@pytest.fixture
def key():
    return make_key(1)


@pytest.fixture
def key_file(tmp_path, key):
    blob = RawKeyBlob.random(random.Random(1), 64)
    path = tmp_path / "key.bin"
    path.write_bytes(blob.to_bytes())
    return str(path)


class TestCipher:
    def test_header_layout(self, key):
        h = CipherHeader.for_key(key).pack()
        assert h == MAGIC + bytes([64, 32, 0, 0]) and len(h) == HEADER_SIZE

    @settings(max_examples=50, deadline=None)
    @given(st.binary(max_size=5000))
    def test_round_trip(self, data):
        key = make_key(2)
        assert decrypt(key, encrypt(key, data)) == data

    def test_zero_plaintext_exposes_keystream(self, key):
        ct = encrypt(key, bytes(1000))
        assert ct == CipherHeader.for_key(key).pack() + keystream_bytes(key, 1000)

    def test_streaming_matches_in_memory(self, key):
        data = np.random.default_rng(0).bytes(3 * (1 << 20) + 17)
        out = io.BytesIO()
        encrypt_stream(key, io.BytesIO(data), out)
        assert out.getvalue() == encrypt(key, data)
        back = io.BytesIO()
        decrypt_stream(key, io.BytesIO(out.getvalue()), back)
        assert back.getvalue() == data

    def test_wrong_key_garbles(self, key):
        data = np.random.default_rng(1).bytes(1024)
        other = make_key(99)
        assert decrypt(other, encrypt(key, data)) != data

    def test_bad_magic(self, key):
        with pytest.raises(BadHeader):
            decrypt(key, b"XXXX" + bytes(4) + b"payload")

    def test_short_header(self, key):
        with pytest.raises(BadHeader):
            decrypt(key, b"TRI")

    def test_reserved_bytes(self, key):
        with pytest.raises(BadHeader):
            decrypt(key, MAGIC + bytes([64, 32, 1, 0]))

    def test_parameter_mismatch(self, key):
        with pytest.raises(KeyMismatch):
            decrypt(make_key(1, s=17), encrypt(key, b"hello"))


def run(argv, capsys):
    rc = main(argv)
    out = capsys.readouterr()
    return rc, out.out, out.err


class TestCliGen:
    def test_empty_output(self, key_file, tmp_path, capsys):
        out = tmp_path / "ks"
        rc, _, _ = run(["gen", "--key-file", key_file, "--nbytes", "0", "-o", str(out)], capsys)
        assert rc == EXIT_OK and out.read_bytes() == b""

    def test_matches_library_and_is_deterministic(self, key_file, key, tmp_path, capsys):
        outs = []
        for i in range(2):
            out = tmp_path / f"ks{i}"
            assert run(["gen", "--key-file", key_file, "--nbytes", "5000", "-o", str(out)],
                       capsys)[0] == EXIT_OK
            outs.append(out.read_bytes())
        assert outs[0] == outs[1] == keystream_bytes(key, 5000)

    def test_hex_key(self, key, tmp_path, capsys):
        blob = RawKeyBlob.random(random.Random(1), 64)
        out = tmp_path / "ks"
        assert run(["gen", "--key-hex", blob.hex(), "--nbytes", "64", "-o", str(out)],
                   capsys)[0] == EXIT_OK
        assert out.read_bytes() == keystream_bytes(key, 64)

    def test_avalanche(self, tmp_path, capsys):
        blob = RawKeyBlob.random(random.Random(5), 64)
        words = list(blob.words)
        words[3] ^= 1 << 20  # one raw bit of a0
        flipped = RawKeyBlob(64, tuple(words))
        streams = []
        for b in (blob, flipped):
            out = tmp_path / "ks"
            run(["gen", "--key-hex", b.hex(), "--nbytes", str(1 << 20), "-o", str(out)], capsys)
            streams.append(np.frombuffer(out.read_bytes(), dtype=np.uint8))
        diff = np.unpackbits(streams[0] ^ streams[1]).mean()
        assert abs(diff - 0.5) < 0.005

    def test_missing_key(self, capsys):
        rc, _, err = run(["gen", "--nbytes", "1"], capsys)
        assert rc == EXIT_USAGE and "key" in err

    def test_bad_key_length(self, tmp_path, capsys):
        path = tmp_path / "k"
        path.write_bytes(bytes(17))
        assert run(["gen", "--key-file", str(path), "--nbytes", "1"], capsys)[0] == EXIT_KEY

    def test_distinctness_failure(self, capsys):
        blob = RawKeyBlob(64, (0,) * 15)
        assert run(["gen", "--key-hex", blob.hex(), "--nbytes", "1"], capsys)[0] == EXIT_KEY

    def test_unknown_flag(self, capsys):
        with pytest.raises(SystemExit) as exc:
            main(["gen", "--bogus"])
        assert exc.value.code == EXIT_USAGE

    def test_keygen_produces_loadable_key(self, tmp_path, capsys):
        path = tmp_path / "k.bin"
        assert run(["keygen", "-o", str(path)], capsys)[0] == EXIT_OK
        assert len(path.read_bytes()) == 120
        key_schedule(RawKeyBlob.from_bytes(path.read_bytes()))


class TestCliCipher:
    def test_file_round_trip(self, key_file, tmp_path, capsys):
        plain = tmp_path / "p"
        plain.write_bytes(np.random.default_rng(3).bytes(70_000))
        enc, dec = tmp_path / "c", tmp_path / "d"
        assert run(["encrypt", "--key-file", key_file, str(plain), "-o", str(enc)],
                   capsys)[0] == EXIT_OK
        assert run(["decrypt", "--key-file", key_file, str(enc), "-o", str(dec)],
                   capsys)[0] == EXIT_OK
        assert dec.read_bytes() == plain.read_bytes()
        assert enc.read_bytes()[:4] == MAGIC

    def test_empty_file(self, key_file, tmp_path, capsys):
        plain = tmp_path / "p"
        plain.write_bytes(b"")
        enc = tmp_path / "c"
        run(["encrypt", "--key-file", key_file, str(plain), "-o", str(enc)], capsys)
        assert len(enc.read_bytes()) == HEADER_SIZE

    def test_bad_header_exit_code(self, key_file, tmp_path, capsys):
        junk = tmp_path / "j"
        junk.write_bytes(b"not a ciphertext")
        assert run(["decrypt", "--key-file", key_file, str(junk), "-o", str(tmp_path / "o")],
                   capsys)[0] == EXIT_DATA

    def test_shift_mismatch_exit_code(self, key_file, tmp_path, capsys):
        plain = tmp_path / "p"
        plain.write_bytes(b"abc")
        enc = tmp_path / "c"
        run(["encrypt", "--key-file", key_file, str(plain), "-o", str(enc)], capsys)
        rc, _, _ = run(["decrypt", "--key-file", key_file, "--s", "5", str(enc),
                        "-o", str(tmp_path / "o")], capsys)
        assert rc == EXIT_KEY

    def test_missing_input(self, key_file, tmp_path, capsys):
        rc, _, _ = run(["encrypt", "--key-file", key_file, str(tmp_path / "nope"),
                        "-o", str(tmp_path / "o")], capsys)
        assert rc == EXIT_DATA


class TestCliAnalyze:
    def test_attack(self, capsys):
        rc, out, _ = run(["analyze", "attack", "--samples", "0,1,6,31", "--n", "16"], capsys)
        assert rc == EXIT_OK
        d = json.loads(out)
        assert (d["recovered_a"], d["recovered_c"]) == (5, 1)

    def test_attack_even_difference(self, capsys):
        assert run(["analyze", "attack", "--samples", "0,2,4"], capsys)[0] == EXIT_DATA

    def test_attack_bad_samples(self, capsys):
        assert run(["analyze", "attack", "--samples", "0,x,4"], capsys)[0] == EXIT_USAGE

    def test_return_map_preset(self, capsys):
        rc, out, _ = run(["analyze", "return-map", "--fig1", "--points", "1000"], capsys)
        rows = [tuple(map(int, line.split(","))) for line in out.splitlines()]
        assert rc == EXIT_OK and len(rows) == 999
        assert all(q == (5 * p + 1) % 65536 for p, q in rows)

    def test_return_map_header(self, capsys):
        _, out, _ = run(["analyze", "return-map", "--fig2b", "--points", "3", "--header"], capsys)
        assert out.splitlines()[0] == "x_prev,x_curr"

    def test_period_dyn(self, capsys):
        rc, out, _ = run(["analyze", "period", "--class", "dyn", "--n", "8", "--trials", "10"],
                         capsys)
        assert rc == EXIT_OK and json.loads(out)["periods"] == [256] * 10

    def test_bitplane(self, capsys):
        _, out, _ = run(["analyze", "bitplane", "--fig1", "--count", "256"], capsys)
        assert json.loads(out)["per_bit_periods"][:2] == [2, 4]

    def test_birthday(self, capsys):
        _, out, _ = run(["analyze", "birthday", "--fig1", "--count", "1000"], capsys)
        d = json.loads(out)
        assert d["observed_distinct"] == 1000 and d["expected_distinct"] < 1000

    def test_trident_period(self, capsys):
        _, out, _ = run(["analyze", "trident-period", "--n", "4"], capsys)
        d = json.loads(out)
        assert d["period"] >= 4 and not d["capped"]


class TestCliTestAndBench:
    def test_battery_json(self, key_file, capsys):
        rc, out, _ = run(["test", "--key-file", key_file, "--k", "2", "--len", "100000",
                          "--json"], capsys)
        d = json.loads(out)
        assert rc == EXIT_OK and d["k"] == 2 and len(d["tests"]) == 8

    def test_battery_table(self, capsys):
        rc, out, _ = run(["test", "--source", "uniform", "--k", "2", "--len", "100000"], capsys)
        assert rc == EXIT_OK and "overall:" in out

    def test_trident_source_needs_key(self, capsys):
        assert run(["test", "--k", "1"], capsys)[0] == EXIT_USAGE

    def test_bench_zero_duration(self, capsys):
        assert run(["bench", "--seconds", "0"], capsys)[0] == EXIT_USAGE

    def test_bench_stable(self, capsys):
        rates = []
        for _ in range(2):
            rc, out, _ = run(["bench", "--seconds", "0.2"], capsys)
            assert rc == EXIT_OK
            rates.append(json.loads(out)["bytes_per_second"])
        assert abs(rates[0] - rates[1]) / max(rates) < 0.25
