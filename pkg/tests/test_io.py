import numpy as np
import pytest

from ade import io
from ade.errors import FormatError, ValidationError
from ade.rng import CounterRng


def test_tensor_round_trip_f64(tmp_path):
    arr = CounterRng(1, 0).uniforms(60).reshape(3, 4, 5)
    path = tmp_path / "t.adet"
    io.write_tensor(path, arr)
    back = io.read_tensor(path)
    assert back.dtype == np.float64
    assert np.array_equal(back, arr)
    back[0, 0, 0] = -1.0  # returned array must be writable


def test_tensor_round_trip_f32(tmp_path):
    arr = np.linspace(0, 1, 12, dtype=np.float32).reshape(4, 3)
    path = tmp_path / "t.adet"
    io.write_tensor(path, arr)
    back = io.read_tensor(path)
    assert back.dtype == np.float32
    assert np.array_equal(back, arr)


def test_tensor_header_size():
    # magic + version + dtype + ndim + 2 dims + one f64 value
    assert 4 + 4 + 1 + 4 + 2 * 8 + 8 == 37


def test_smallest_tensor_is_37_bytes(tmp_path):
    path = tmp_path / "t.adet"
    io.write_tensor(path, np.zeros((1, 1)))
    assert path.stat().st_size == 37
    assert not list(tmp_path.glob("*.tmp*"))  # atomic write left no litter


def test_tensor_rejects_unsupported_dtypes(tmp_path):
    with pytest.raises(ValidationError):
        io.write_tensor(tmp_path / "t.adet", np.zeros((2, 2), dtype=np.int64))
    with pytest.raises(ValidationError):
        io.write_tensor(tmp_path / "t.adet", np.float64(3.0))


def test_tensor_accepts_noncontiguous_views(tmp_path):
    arr = np.arange(24, dtype=np.float64).reshape(4, 6)
    view = arr[:, ::2]
    path = tmp_path / "t.adet"
    io.write_tensor(path, view)
    assert np.array_equal(io.read_tensor(path), view)


def _poke(tmp_path, name, mutate):
    path = tmp_path / name
    io.write_tensor(path, np.zeros((2, 2)))
    raw = bytearray(path.read_bytes())
    mutate(raw)
    path.write_bytes(bytes(raw))
    return path


def test_corrupt_tensor_errors_carry_byte_offsets(tmp_path):
    def bad_magic(raw):
        raw[0:4] = b"NOPE"
    with pytest.raises(FormatError, match=r"\(byte 0\)"):
        io.read_tensor(_poke(tmp_path, "a.adet", bad_magic))

    def bad_version(raw):
        raw[4] = 9
    with pytest.raises(FormatError, match=r"\(byte 4\)"):
        io.read_tensor(_poke(tmp_path, "b.adet", bad_version))

    def bad_dtype(raw):
        raw[8] = 7
    with pytest.raises(FormatError, match=r"\(byte 8\)"):
        io.read_tensor(_poke(tmp_path, "c.adet", bad_dtype))

    def truncate(raw):
        del raw[-5:]
    with pytest.raises(FormatError):
        io.read_tensor(_poke(tmp_path, "d.adet", truncate))

    def pad(raw):
        raw.extend(b"\x00" * 3)
    with pytest.raises(FormatError):
        io.read_tensor(_poke(tmp_path, "e.adet", pad))


def test_pgm_round_trip_8bit(tmp_path):
    field = CounterRng(2, 0).uniforms(48).reshape(1, 6, 8)
    path = tmp_path / "img.pgm"
    io.write_image(path, field, maxval=255)
    stack, maxval = io.read_image(path)
    assert maxval == 255
    assert stack.shape == (1, 6, 8)
    # second pass through the quantizer is the identity
    second = tmp_path / "img2.pgm"
    io.write_image(second, stack, maxval=255)
    assert path.read_bytes() == second.read_bytes()


def test_ppm_round_trip_16bit(tmp_path):
    field = CounterRng(3, 0).uniforms(3 * 4 * 5).reshape(3, 4, 5)
    path = tmp_path / "img.ppm"
    io.write_image(path, field, maxval=65535)
    stack, maxval = io.read_image(path)
    assert maxval == 65535
    assert stack.shape == (3, 4, 5)
    second = tmp_path / "img2.ppm"
    io.write_image(second, stack, maxval=65535)
    assert path.read_bytes() == second.read_bytes()


def test_16bit_samples_are_big_endian(tmp_path):
    path = tmp_path / "img.pgm"
    io.write_image(path, np.array([[1.0 / 257.0]]), maxval=65535)
    raw = path.read_bytes()
    # 65535/257 = 255 -> 0x00ff, most significant byte first
    assert raw.endswith(b"\x00\xff")


def test_quantization_rounds_half_to_even(tmp_path):
    path = tmp_path / "img.pgm"
    io.write_image(path, np.array([[0.5 / 255.0, 1.5 / 255.0]]), maxval=255)
    assert path.read_bytes().endswith(bytes([0, 2]))


def test_read_image_handles_comments_and_whitespace(tmp_path):
    path = tmp_path / "img.pgm"
    path.write_bytes(b"P5 # magic\n# a comment line\n 2\t1 \n255\n\x00\xff")
    stack, maxval = io.read_image(path)
    assert maxval == 255
    assert stack.tolist() == [[[0.0, 1.0]]]


def test_read_image_rejects_out_of_range_samples(tmp_path):
    path = tmp_path / "img.pgm"
    path.write_bytes(b"P5\n1 1\n100\n\xff")
    with pytest.raises(FormatError):
        io.read_image(path)


def test_write_image_validation(tmp_path):
    with pytest.raises(ValidationError):
        io.write_image(tmp_path / "x.pgm", np.zeros((2, 4, 4)))
    with pytest.raises(ValidationError):
        io.write_image(tmp_path / "x.pgm", np.zeros((4, 4)), maxval=1023)
    with pytest.raises(ValidationError):
        io.write_image(tmp_path / "x.pgm", np.full((4, 4), np.nan))


def test_heatmap_normalizes_and_handles_flat_fields(tmp_path):
    path = tmp_path / "h.pgm"
    io.write_heatmap(path, np.array([[2.0, 4.0], [6.0, 10.0]]))
    stack, _ = io.read_image(path)
    assert stack.min() == 0.0 and stack.max() == 1.0
    io.write_heatmap(path, np.full((3, 3), 7.0))
    stack, _ = io.read_image(path)
    assert np.all(stack == stack[0, 0, 0])
    assert 0.4 < stack[0, 0, 0] < 0.6


def test_config_round_trip_and_precedence(tmp_path):
    path = tmp_path / "run.cfg"
    io.write_config(path, {"steps": 8, "pe": 0.25, "name": "trial a"})
    cfg = io.read_config(path)
    assert cfg == {"steps": "8", "pe": "0.25", "name": "trial a"}
    path.write_text("a=1\n# comment\n\na = 2  \n")
    assert io.read_config(path) == {"a": "2"}


def test_config_rejects_bare_tokens(tmp_path):
    path = tmp_path / "run.cfg"
    path.write_text("a=1\nnot a pair\n")
    with pytest.raises(FormatError, match=r"\(byte 4\)"):
        io.read_config(path)


def test_sha256_of_empty_file(tmp_path):
    path = tmp_path / "empty"
    path.write_bytes(b"")
    assert io.file_sha256(path) == (
        "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855")
