"""Decoder/encoder for IAB TCF consent strings (v1.1 core, v2 core segment).

Only the fields needed to judge consent polarity and the purpose/vendor
sets are interpreted. Everything else that appears on the wire (v2 core
extras, vendor legitimate-interest section, publisher restrictions) is
decoded structurally so that re-encoding an unmodified record is
byte-identical; v2 segments after the core one are preserved opaquely.

Unknown versions are a hard error: a wrong polarity verdict is worse than
an inconclusive one.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from datetime import datetime, timezone
from enum import Enum

from .errors import DecodeError, EncodeError

_B64_ALPHABET = "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789-_"
_B64_VALUE = {c: i for i, c in enumerate(_B64_ALPHABET)}

PURPOSE_BITS = 24
MAX_PURPOSE_ID = 24
MAX_VENDOR_ID_LIMIT = 0xFFFF


class _Reader:
    """Cursor over the 6-bit expansion of a base64url string."""

    def __init__(self, s: str):
        bits = 0
        for ch in s:
            val = _B64_VALUE.get(ch)
            if val is None:
                raise DecodeError(DecodeError.BAD_BASE64, f"invalid character {ch!r}")
            bits = (bits << 6) | val
        self.bits = bits
        self.total = 6 * len(s)
        self.pos = 0

    def read(self, width: int) -> int:
        if self.pos + width > self.total:
            raise DecodeError(DecodeError.TRUNCATED_BITS,
                              f"needed {width} bits", bit_offset=self.pos)
        shift = self.total - self.pos - width
        self.pos += width
        return (self.bits >> shift) & ((1 << width) - 1)

    def read_flag(self) -> bool:
        return bool(self.read(1))

    def remaining_bits(self) -> str:
        """All bits after the cursor, as a '0'/'1' string."""
        width = self.total - self.pos
        if width == 0:
            return ""
        val = self.bits & ((1 << width) - 1)
        return format(val, f"0{width}b")


class _Writer:
    def __init__(self):
        self.acc = 0
        self.n = 0

    def write(self, value: int, width: int) -> None:
        self.acc = (self.acc << width) | (value & ((1 << width) - 1))
        self.n += width

    def write_flag(self, flag: bool) -> None:
        self.write(1 if flag else 0, 1)

    def write_bits(self, bits: str) -> None:
        for b in bits:
            self.write(1 if b == "1" else 0, 1)

    def to_base64url(self) -> str:
        pad = (6 - self.n % 6) % 6
        acc = self.acc << pad
        count = (self.n + pad) // 6
        return "".join(
            _B64_ALPHABET[(acc >> (6 * (count - 1 - i))) & 63] for i in range(count)
        )


def _ids_to_bitset(ids: frozenset[int], width: int) -> int:
    value = 0
    for i in ids:
        value |= 1 << (width - i)
    return value


def _bitset_to_ids(value: int, width: int) -> frozenset[int]:
    return frozenset(i for i in range(1, width + 1) if (value >> (width - i)) & 1)


def _ranges_of(ids: frozenset[int]) -> tuple[tuple[int, int], ...]:
    """Minimal runs of consecutive ids, sorted ascending."""
    runs = []
    start = prev = None
    for i in sorted(ids):
        if prev is None:
            start = prev = i
        elif i == prev + 1:
            prev = i
        else:
            runs.append((start, prev))
            start = prev = i
    if prev is not None:
        runs.append((start, prev))
    return tuple(runs)


class ConsentPolarity(Enum):
    POSITIVE = "positive"
    NEGATIVE = "negative"


@dataclass(frozen=True)
class VendorBlock:
    """A vendor id set plus the wire encoding it was (or will be) carried in."""

    max_vendor_id: int = 0
    uses_ranges: bool = False
    vendors: frozenset[int] = frozenset()
    raw_ranges: tuple[tuple[int, int], ...] | None = field(default=None, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "vendors", frozenset(self.vendors))
        if self.max_vendor_id == 0 and self.vendors:
            object.__setattr__(self, "max_vendor_id", max(self.vendors))


@dataclass(frozen=True)
class PublisherRestriction:
    purpose_id: int
    restriction_type: int
    vendor_ranges: tuple[tuple[int, int], ...] = ()


@dataclass(frozen=True)
class TcfV2Extras:
    """v2 core fields with no v1 counterpart; carried for re-encoding."""

    tcf_policy_version: int = 2
    is_service_specific: bool = False
    use_non_standard_stacks: bool = False
    special_feature_opt_ins: frozenset[int] = frozenset()
    purposes_li_transparency: frozenset[int] = frozenset()
    purpose_one_treatment: bool = False
    publisher_cc: str = "AA"
    vendor_li: VendorBlock = VendorBlock()
    publisher_restrictions: tuple[PublisherRestriction, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "special_feature_opt_ins",
                           frozenset(self.special_feature_opt_ins))
        object.__setattr__(self, "purposes_li_transparency",
                           frozenset(self.purposes_li_transparency))


@dataclass(frozen=True)
class TcfConsentRecord:
    """Decoded consent string: metadata, purpose bitset, vendor consents."""

    tcf_version: int
    created_ds: int  # deciseconds since the Unix epoch, as on the wire
    last_updated_ds: int
    cmp_id: int
    cmp_version: int
    consent_screen: int
    consent_language: str
    vendor_list_version: int
    purposes_consent: frozenset[int]
    vendor_consents: frozenset[int]
    max_vendor_id: int = 0
    vendor_uses_ranges: bool = False
    v1_range_default_consent: bool = False
    v2: TcfV2Extras | None = None
    extra_segments: tuple[str, ...] = ()
    trailing_bits: str = ""
    raw_vendor_ranges: tuple[tuple[int, int], ...] | None = field(default=None, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "purposes_consent", frozenset(self.purposes_consent))
        object.__setattr__(self, "vendor_consents", frozenset(self.vendor_consents))
        if self.max_vendor_id == 0 and self.vendor_consents:
            object.__setattr__(self, "max_vendor_id", max(self.vendor_consents))
        if self.tcf_version == 2 and self.v2 is None:
            object.__setattr__(self, "v2", TcfV2Extras())

    @property
    def created(self) -> datetime:
        return datetime.fromtimestamp(self.created_ds / 10, tz=timezone.utc)

    @property
    def last_updated(self) -> datetime:
        return datetime.fromtimestamp(self.last_updated_ds / 10, tz=timezone.utc)


def polarity(record: TcfConsentRecord) -> ConsentPolarity:
    """Positive iff at least one purpose and at least one vendor is consented.

    Data processing needs both a purpose and a party performing it; a
    purposes-only string grants nothing actionable.
    """
    if record.purposes_consent and record.vendor_consents:
        return ConsentPolarity.POSITIVE
    return ConsentPolarity.NEGATIVE


# --- decoding ----------------------------------------------------------------


def _read_language(reader: _Reader) -> str:
    chars = []
    for _ in range(2):
        offset = reader.pos
        val = reader.read(6)
        if val > 25:
            raise DecodeError(DecodeError.TRUNCATED_BITS,
                              f"invalid language letter value {val}", bit_offset=offset)
        chars.append(chr(ord("A") + val))
    return "".join(chars)


def _read_range_entries(reader: _Reader) -> tuple[tuple[int, int], ...]:
    num_entries = reader.read(12)
    entries = []
    for _ in range(num_entries):
        is_range = reader.read_flag()
        offset = reader.pos
        start = reader.read(16)
        end = reader.read(16) if is_range else start
        if start == 0 or end < start:
            raise DecodeError(DecodeError.TRUNCATED_BITS,
                              f"invalid vendor range {start}..{end}", bit_offset=offset)
        entries.append((start, end))
    return tuple(entries)


def _resolve_ranges(entries, max_vendor_id: int, default_consent: bool) -> frozenset[int]:
    listed: set[int] = set()
    for start, end in entries:
        listed.update(range(start, end + 1))
    if default_consent:
        return frozenset(i for i in range(1, max_vendor_id + 1) if i not in listed)
    return frozenset(listed)


def _read_bitfield_vendors(reader: _Reader, max_vendor_id: int) -> frozenset[int]:
    bits = reader.read(max_vendor_id) if max_vendor_id else 0
    return _bitset_to_ids(bits, max_vendor_id)


def _read_vendor_block(reader: _Reader) -> VendorBlock:
    max_vendor_id = reader.read(16)
    uses_ranges = reader.read_flag()
    if uses_ranges:
        entries = _read_range_entries(reader)
        vendors = _resolve_ranges(entries, max_vendor_id, default_consent=False)
        return VendorBlock(max_vendor_id, True, vendors, raw_ranges=entries)
    return VendorBlock(max_vendor_id, False, _read_bitfield_vendors(reader, max_vendor_id))


def _take_trailing(reader: _Reader) -> str:
    # All-zero remainders that are just the pad to the next base64 character
    # are canonical and dropped; anything else is preserved verbatim.
    rest = reader.remaining_bits()
    minimal_pad = (6 - reader.pos % 6) % 6
    if len(rest) == minimal_pad and "1" not in rest:
        return ""
    return rest


def _decode_v1(reader: _Reader) -> TcfConsentRecord:
    created = reader.read(36)
    updated = reader.read(36)
    cmp_id = reader.read(12)
    cmp_version = reader.read(12)
    consent_screen = reader.read(6)
    language = _read_language(reader)
    vendor_list_version = reader.read(12)
    purposes = _bitset_to_ids(reader.read(PURPOSE_BITS), PURPOSE_BITS)
    max_vendor_id = reader.read(16)
    uses_ranges = reader.read_flag()
    default_consent = False
    raw_ranges = None
    if uses_ranges:
        default_consent = reader.read_flag()
        raw_ranges = _read_range_entries(reader)
        vendors = _resolve_ranges(raw_ranges, max_vendor_id, default_consent)
    else:
        vendors = _read_bitfield_vendors(reader, max_vendor_id)
    return TcfConsentRecord(
        tcf_version=1,
        created_ds=created,
        last_updated_ds=updated,
        cmp_id=cmp_id,
        cmp_version=cmp_version,
        consent_screen=consent_screen,
        consent_language=language,
        vendor_list_version=vendor_list_version,
        purposes_consent=purposes,
        vendor_consents=vendors,
        max_vendor_id=max_vendor_id,
        vendor_uses_ranges=uses_ranges,
        v1_range_default_consent=default_consent,
        trailing_bits=_take_trailing(reader),
        raw_vendor_ranges=raw_ranges,
    )


def _decode_v2_core(reader: _Reader, extra_segments: tuple[str, ...]) -> TcfConsentRecord:
    created = reader.read(36)
    updated = reader.read(36)
    cmp_id = reader.read(12)
    cmp_version = reader.read(12)
    consent_screen = reader.read(6)
    language = _read_language(reader)
    vendor_list_version = reader.read(12)
    policy_version = reader.read(6)
    is_service_specific = reader.read_flag()
    non_standard = reader.read_flag()
    special_features = _bitset_to_ids(reader.read(12), 12)
    purposes = _bitset_to_ids(reader.read(PURPOSE_BITS), PURPOSE_BITS)
    purposes_li = _bitset_to_ids(reader.read(PURPOSE_BITS), PURPOSE_BITS)
    purpose_one = reader.read_flag()
    publisher_cc = _read_language(reader)

    consent_block = _read_vendor_block(reader)
    li_block = _read_vendor_block(reader)

    restrictions = []
    for _ in range(reader.read(12)):
        purpose_id = reader.read(6)
        restriction_type = reader.read(2)
        restrictions.append(PublisherRestriction(
            purpose_id, restriction_type, _read_range_entries(reader)))

    extras = TcfV2Extras(
        tcf_policy_version=policy_version,
        is_service_specific=is_service_specific,
        use_non_standard_stacks=non_standard,
        special_feature_opt_ins=special_features,
        purposes_li_transparency=purposes_li,
        purpose_one_treatment=purpose_one,
        publisher_cc=publisher_cc,
        vendor_li=li_block,
        publisher_restrictions=tuple(restrictions),
    )
    return TcfConsentRecord(
        tcf_version=2,
        created_ds=created,
        last_updated_ds=updated,
        cmp_id=cmp_id,
        cmp_version=cmp_version,
        consent_screen=consent_screen,
        consent_language=language,
        vendor_list_version=vendor_list_version,
        purposes_consent=purposes,
        vendor_consents=consent_block.vendors,
        max_vendor_id=consent_block.max_vendor_id,
        vendor_uses_ranges=consent_block.uses_ranges,
        v2=extras,
        extra_segments=extra_segments,
        trailing_bits=_take_trailing(reader),
        raw_vendor_ranges=consent_block.raw_ranges,
    )


def decode_tcf(s: str) -> TcfConsentRecord:
    """Decode a base64url consent string into a TcfConsentRecord.

    Raises DecodeError with reason bad_base64, truncated_bits or
    unsupported_version; never anything else, whatever the input.
    """
    if not isinstance(s, str) or not s:
        raise DecodeError(DecodeError.BAD_BASE64, "empty input")
    segments = s.split(".")
    for seg in segments[1:]:
        for ch in seg:
            if ch not in _B64_VALUE:
                raise DecodeError(DecodeError.BAD_BASE64,
                                  f"invalid character {ch!r} in extra segment")
    reader = _Reader(segments[0])
    version = reader.read(6)
    if version == 1:
        record = _decode_v1(reader)
    elif version == 2:
        record = _decode_v2_core(reader, tuple(segments[1:]))
    else:
        raise DecodeError(DecodeError.UNSUPPORTED_VERSION, f"version {version}")
    if record.tcf_version == 1 and len(segments) > 1:
        object.__setattr__(record, "extra_segments", tuple(segments[1:]))
    return record


# --- encoding ----------------------------------------------------------------


def _check_range(name: str, value: int, width: int) -> int:
    if not 0 <= value < (1 << width):
        raise EncodeError(f"{name}_out_of_range", f"{value} does not fit {width} bits")
    return value


def _check_language(name: str, value: str) -> str:
    if len(value) != 2 or not all("A" <= c <= "Z" for c in value.upper()):
        raise EncodeError(f"{name}_invalid", f"expected two letters, got {value!r}")
    return value.upper()


def _check_id_set(name: str, ids: frozenset[int], upper: int) -> frozenset[int]:
    for i in ids:
        if not 1 <= i <= upper:
            raise EncodeError(f"{name}_out_of_range", f"id {i} outside 1..{upper}")
    return ids


def _write_language(writer: _Writer, value: str) -> None:
    for c in value:
        writer.write(ord(c) - ord("A"), 6)


def _write_range_entries(writer: _Writer, entries) -> None:
    writer.write(len(entries), 12)
    for start, end in entries:
        if start == end:
            writer.write_flag(False)
            writer.write(start, 16)
        else:
            writer.write_flag(True)
            writer.write(start, 16)
            writer.write(end, 16)


def _vendor_wire_ranges(vendors: frozenset[int], max_vendor_id: int,
                        default_consent: bool, raw) -> tuple[tuple[int, int], ...]:
    if raw is not None:
        return raw
    if default_consent:
        exceptions = frozenset(range(1, max_vendor_id + 1)) - vendors
        return _ranges_of(exceptions)
    return _ranges_of(vendors)


def _validate_vendor_block(name: str, block: VendorBlock) -> None:
    _check_range(f"{name}_max_vendor_id", block.max_vendor_id, 16)
    for vid in block.vendors:
        if vid < 1 or vid > MAX_VENDOR_ID_LIMIT:
            raise EncodeError("vendor_id_out_of_range", f"vendor id {vid}")
        if vid > block.max_vendor_id:
            raise EncodeError("vendor_id_out_of_range",
                              f"vendor id {vid} exceeds max_vendor_id {block.max_vendor_id}")


def _write_vendor_block(writer: _Writer, block: VendorBlock) -> None:
    writer.write(block.max_vendor_id, 16)
    writer.write_flag(block.uses_ranges)
    if block.uses_ranges:
        _write_range_entries(
            writer,
            _vendor_wire_ranges(block.vendors, block.max_vendor_id, False, block.raw_ranges))
    elif block.max_vendor_id:
        writer.write(_ids_to_bitset(block.vendors, block.max_vendor_id), block.max_vendor_id)


def _validate_common(record: TcfConsentRecord) -> None:
    _check_range("created", record.created_ds, 36)
    _check_range("last_updated", record.last_updated_ds, 36)
    _check_range("cmp_id", record.cmp_id, 12)
    _check_range("cmp_version", record.cmp_version, 12)
    _check_range("consent_screen", record.consent_screen, 6)
    _check_range("vendor_list_version", record.vendor_list_version, 12)
    _check_id_set("purpose_id", record.purposes_consent, MAX_PURPOSE_ID)
    _check_range("max_vendor_id", record.max_vendor_id, 16)
    for vid in record.vendor_consents:
        if vid < 1 or vid > MAX_VENDOR_ID_LIMIT:
            raise EncodeError("vendor_id_out_of_range", f"vendor id {vid}")
        if vid > record.max_vendor_id:
            raise EncodeError("vendor_id_out_of_range",
                              f"vendor id {vid} exceeds max_vendor_id {record.max_vendor_id}")


def _encode_v1(record: TcfConsentRecord, writer: _Writer) -> None:
    writer.write(record.created_ds, 36)
    writer.write(record.last_updated_ds, 36)
    writer.write(record.cmp_id, 12)
    writer.write(record.cmp_version, 12)
    writer.write(record.consent_screen, 6)
    _write_language(writer, _check_language("consent_language", record.consent_language))
    writer.write(record.vendor_list_version, 12)
    writer.write(_ids_to_bitset(record.purposes_consent, PURPOSE_BITS), PURPOSE_BITS)
    writer.write(record.max_vendor_id, 16)
    writer.write_flag(record.vendor_uses_ranges)
    if record.vendor_uses_ranges:
        writer.write_flag(record.v1_range_default_consent)
        _write_range_entries(writer, _vendor_wire_ranges(
            record.vendor_consents, record.max_vendor_id,
            record.v1_range_default_consent, record.raw_vendor_ranges))
    elif record.max_vendor_id:
        writer.write(_ids_to_bitset(record.vendor_consents, record.max_vendor_id),
                     record.max_vendor_id)


def _encode_v2(record: TcfConsentRecord, writer: _Writer) -> None:
    extras = record.v2 or TcfV2Extras()
    _check_range("tcf_policy_version", extras.tcf_policy_version, 6)
    _check_id_set("special_feature", extras.special_feature_opt_ins, 12)
    _check_id_set("purpose_id", extras.purposes_li_transparency, MAX_PURPOSE_ID)
    _validate_vendor_block("vendor_li", extras.vendor_li)

    writer.write(record.created_ds, 36)
    writer.write(record.last_updated_ds, 36)
    writer.write(record.cmp_id, 12)
    writer.write(record.cmp_version, 12)
    writer.write(record.consent_screen, 6)
    _write_language(writer, _check_language("consent_language", record.consent_language))
    writer.write(record.vendor_list_version, 12)
    writer.write(extras.tcf_policy_version, 6)
    writer.write_flag(extras.is_service_specific)
    writer.write_flag(extras.use_non_standard_stacks)
    writer.write(_ids_to_bitset(extras.special_feature_opt_ins, 12), 12)
    writer.write(_ids_to_bitset(record.purposes_consent, PURPOSE_BITS), PURPOSE_BITS)
    writer.write(_ids_to_bitset(extras.purposes_li_transparency, PURPOSE_BITS), PURPOSE_BITS)
    writer.write_flag(extras.purpose_one_treatment)
    _write_language(writer, _check_language("publisher_cc", extras.publisher_cc))

    _write_vendor_block(writer, VendorBlock(
        record.max_vendor_id, record.vendor_uses_ranges,
        record.vendor_consents, record.raw_vendor_ranges))
    _write_vendor_block(writer, extras.vendor_li)

    writer.write(len(extras.publisher_restrictions), 12)
    for restriction in extras.publisher_restrictions:
        _check_range("restriction_purpose", restriction.purpose_id, 6)
        _check_range("restriction_type", restriction.restriction_type, 2)
        writer.write(restriction.purpose_id, 6)
        writer.write(restriction.restriction_type, 2)
        _write_range_entries(writer, restriction.vendor_ranges)


def encode_tcf(record: TcfConsentRecord) -> str:
    """Encode a record as canonical, padding-free base64url."""
    if record.tcf_version not in (1, 2):
        raise EncodeError("unsupported_version", f"version {record.tcf_version}")
    _validate_common(record)
    if record.tcf_version == 1 and not record.vendor_uses_ranges \
            and record.v1_range_default_consent:
        raise EncodeError("default_consent_without_ranges",
                          "v1 default consent flag requires range encoding")

    writer = _Writer()
    writer.write(record.tcf_version, 6)
    if record.tcf_version == 1:
        _encode_v1(record, writer)
    else:
        _encode_v2(record, writer)
    if record.trailing_bits:
        writer.write_bits(record.trailing_bits)
    core = writer.to_base64url()
    return ".".join((core, *record.extra_segments))
