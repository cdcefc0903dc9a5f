DNA_SYMBOLS = "ACGT"
MAX_ALPHABET_SIZE = 16

CODON_LENGTH = 3
DEFAULT_WINDOW_ORDER = 8
MIN_WINDOW_ORDER = 3
MAX_WINDOW_ORDER = 10

# subword sets above this many codes are hashed instead of bitset-backed
BITSET_LIMIT = 1 << 26
MAX_DE_BRUIJN_CODES = 1 << 28

DEFAULT_RADIUS = 10.0
KERNEL_TRUNCATION = 4.0

DEFAULT_TOLERANCE = 1e-6
DEFAULT_MAX_STEPS = 10_000
SIMPLEX_STEP = 0.05

ZERO_COUNT_FLOOR = 1e-12

POWER_ITERATION_TOLERANCE = 1e-13
POWER_ITERATION_CAP = 1_000_000

PROFILE_COLUMNS = (
    "t",
    "chrom",
    "window",
    "start",
    "end",
    "valid",
    "pressure",
    "cds_count",
    "cds_density",
)
SMOOTHED_COLUMNS = ("smoothed_pressure", "smoothed_density")
SCORE_COLUMNS = ("name", "label", "score")
ROC_COLUMNS = ("threshold", "fpr", "tpr")
HISTOGRAM_COLUMNS = ("bin_low", "bin_high", "count_pos", "count_neg")
SUMMARY_COLUMNS = ("track", "correlation")

# weight vectors summing to 1 within this slack are taken as normalized
NORMALIZATION_SLACK = 1e-14
