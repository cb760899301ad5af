TOOL_NAME = 'ppm-game'

# profile and distribution files
PROFILE_KEY = 'profile'
CANDIDATES_KEY = 'candidates'
DISTRIBUTION_KEY = 'distribution'
PORTFOLIOS_KEY = 'portfolios'

REPORT_INDENT = 2
STDOUT = '-'
