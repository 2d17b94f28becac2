import sys
import vako

sys.exit(vako.main(sys.argv[1:]))
