"""Palette: TTY colours used for log levels."""

TTY_COLOR_AQUA = "\u001b[38;5;14m"
TTY_COLOR_DARK_VIOLET = "\u001b[38;5;128m"
TTY_STYLE_DEFAULT = "\u001b[0m"
TTY_COLOR_GREEN_3 = "\u001b[38;5;40m"
TTY_COLOR_GREY_50 = "\u001b[38;5;244m"
TTY_COLOR_ORANGE_RED_1 = "\u001b[38;5;202m"
TTY_COLOR_RED_1 = "\u001b[38;5;196m"
TTY_COLOR_YELLOW_3 = "\u001b[38;5;184m"
