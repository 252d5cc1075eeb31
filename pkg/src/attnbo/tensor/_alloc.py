"""glibc allocator tuning.

Activations are a few MB each; with the default mmap threshold every
temporary is a fresh mapping and elementwise ops pay for page faults on
first touch.  Raising the thresholds keeps those blocks on the heap.
"""

import ctypes
import sys

_M_TRIM_THRESHOLD = -1
_M_MMAP_THRESHOLD = -3
_done = False


def keep_large_blocks_on_heap(limit=1 << 30):
    global _done
    if _done or not sys.platform.startswith("linux"):
        return False
    try:
        libc = ctypes.CDLL("libc.so.6")
        ok = libc.mallopt(_M_MMAP_THRESHOLD, limit) == 1 and libc.mallopt(_M_TRIM_THRESHOLD, limit) == 1
    except (OSError, AttributeError):
        ok = False
    _done = True
    return ok
